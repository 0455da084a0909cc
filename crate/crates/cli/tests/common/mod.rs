#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

pub const NOW: &str = "2024-03-01T09:00:00Z";
pub const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/demo");

pub struct Out {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Out {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }

    pub fn lines(&self) -> Vec<&str> {
        self.stdout.lines().collect()
    }
}

/// A scratch project directory driven through the `ringforge` binary.
pub struct Project {
    pub dir: TempDir,
}

impl Project {
    pub fn empty() -> Project {
        let p = Project { dir: tempfile::tempdir().unwrap() };
        let out = p.run(&["init", "--author", "alice"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        p
    }

    /// The demo model saved by alice; checked off by bob when `checked`.
    pub fn demo(checked: bool) -> Project {
        let p = Project { dir: tempfile::tempdir().unwrap() };
        let mut args = vec!["init", "--demo", "--author", "alice"];
        if checked {
            args.extend(["--check-by", "bob"]);
        }
        let out = p.run(&args);
        assert_eq!(out.code, 0, "{}", out.stderr);
        p
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    /// Runs the binary in the project directory with a fixed `--now` unless one is given.
    pub fn run(&self, args: &[&str]) -> Out {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ringforge"));
        cmd.current_dir(self.dir.path()).env_remove("RINGFORGE_STORE").args(args);
        if !args.contains(&"--now") {
            cmd.args(["--now", NOW]);
        }
        let o = cmd.output().expect("binary runs");
        Out {
            code: o.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }
    }

    /// Writes `value` as an element file and returns its path.
    pub fn write_json(&self, name: &str, value: &Value) -> String {
        let path = self.path(name);
        std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
        path.to_string_lossy().into_owned()
    }

    pub fn id(&self, reference: &str) -> String {
        let out = self.run(&["status", reference, "--format", "json"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        out.json()["id"].as_str().unwrap().to_string()
    }
}

pub fn fixture(name: &str) -> Value {
    let path = Path::new(FIXTURES).join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of `run` output as (path, period values).
pub fn tsv_rows(stdout: &str) -> Vec<(String, Vec<String>)> {
    stdout
        .lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| {
            let mut cells = l.split('\t');
            let path = cells.next().unwrap().to_string();
            let _single = cells.next();
            (path, cells.map(str::to_string).collect())
        })
        .collect()
}

pub fn tsv_row(stdout: &str, path: &str) -> Vec<String> {
    tsv_rows(stdout).into_iter().find(|(p, _)| p == path).map(|(_, v)| v).unwrap_or_else(|| panic!("no row {path}"))
}

pub fn all_checks(stdout: &str) -> Option<bool> {
    stdout.lines().find_map(|l| l.strip_prefix("AllChecks\t")).map(|v| v == "TRUE")
}
