mod args;
mod commands;
mod project;

use std::process::ExitCode;

use chrono::{SubsecRound, Utc};
use clap::Parser;
use serde_json::json;

use args::{Cli, Format};
use ringforge_core::Error;

/// Process exit codes.
mod exit {
    pub const OK: i32 = 0;
    /// Usage, i/o and store errors; warnings under `diagnose --strict`.
    pub const FAILURE: i32 = 1;
    /// Blocking diagnostics, or an element that does not assemble.
    pub const BLOCKED: i32 = 2;
    /// `run`: AllChecks is FALSE.
    pub const CHECKS_FAILED: i32 = 3;
    /// `verify`: the workbook differs from regeneration.
    pub const TAMPERED: i32 = 4;
}

fn report(format: Format, e: &Error) {
    match format {
        Format::Json => {
            let record = json!({ "error": { "code": e.code(), "message": e.to_string(), "diagnostics": e.diagnostics() } });
            eprintln!("{}", serde_json::to_string_pretty(&record).expect("json values serialize"));
        }
        Format::Text => {
            eprintln!("error[{}]: {e}", e.code());
            for d in e.diagnostics() {
                eprintln!("  {d}");
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cwd = std::env::current_dir().unwrap_or_else(|_| ".".into());
    let project = match project::Project::load(&cwd) {
        Ok(p) => p,
        Err(e) => {
            report(cli.format, &e);
            return ExitCode::from(exit::FAILURE as u8);
        }
    };
    let env = commands::Env {
        project,
        store_flag: cli.store,
        now: cli.now.unwrap_or_else(|| Utc::now().trunc_subsecs(0)),
        format: cli.format,
    };
    let code = match commands::run(&env, cli.command) {
        Ok(code) => code,
        Err(e) => {
            report(env.format, &e);
            match e {
                Error::Assembly(_) | Error::InvalidElement(_) => exit::BLOCKED,
                _ => exit::FAILURE,
            }
        }
    };
    ExitCode::from(code as u8)
}
