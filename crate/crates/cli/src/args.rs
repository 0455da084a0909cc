use std::path::PathBuf;

use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ringforge", version, about = "Build, check and generate spreadsheet models from versioned templates")]
pub struct Cli {
    /// Store directory; overrides project.json.
    #[arg(long, global = true, env = "RINGFORGE_STORE")]
    pub store: Option<PathBuf>,

    /// Timestamp recorded in audit entries and check records (RFC 3339).
    #[arg(long, global = true, value_parser = parse_time)]
    pub now: Option<DateTime<Utc>>,

    /// Output format; errors go to stderr in the same format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create project.json and an empty store.
    Init {
        /// Also save the demo model and point refs at it.
        #[arg(long)]
        demo: bool,
        /// Default author written to project.json.
        #[arg(long)]
        author: Option<String>,
        /// With --demo, check every demo element off as this reviewer.
        #[arg(long)]
        check_by: Option<String>,
    },
    /// Save an element file; prints the version id and moves the ref named after the element.
    Save {
        file: PathBuf,
        /// Version the file was derived from; the change is audited against it.
        #[arg(long)]
        parent: Option<String>,
        /// Defaults to the project author.
        #[arg(long)]
        author: Option<String>,
    },
    /// Record an independent check; status becomes OK.
    Checkoff {
        reference: String,
        #[arg(long)]
        by: String,
    },
    /// Own and effective status.
    Status { reference: String },
    /// Audit trail, oldest first.
    Log { reference: String },
    /// Field changes between two versions.
    Diff { from: String, to: String },
    /// Run every checker; exit 2 on errors, 1 on warnings with --strict.
    Diagnose {
        reference: String,
        #[arg(long)]
        strict: bool,
    },
    /// Write model.xlsx, model.grid.json, databook.md and spec.md.
    Generate {
        model: String,
        /// Output directory; defaults to the project's out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Generation timestamp, also used for zip entry times; defaults to --now.
        #[arg(long, value_parser = parse_time)]
        epoch: Option<DateTime<Utc>>,
        /// Treat warnings as blocking.
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate the generated workbook for one scenario; prints TSV.
    Run {
        model: String,
        #[arg(long)]
        scenario: String,
    },
    /// Compare a workbook file with regeneration from a model version; exit 4 when it differs.
    Verify {
        file: PathBuf,
        /// Model ref or version id to regenerate from.
        #[arg(long)]
        against: String,
    },
    /// Point a parent element at a new version of one child and save the result.
    Upgrade {
        parent: String,
        /// The child version the parent currently points at.
        #[arg(long)]
        child_old: String,
        /// Its replacement.
        #[arg(long)]
        child_new: String,
        /// Defaults to the project author.
        #[arg(long)]
        author: Option<String>,
    },
    /// List refs and the versions they point at.
    Refs,
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| format!("`{s}` is not an RFC 3339 timestamp or a YYYY-MM-DD date"))
}
