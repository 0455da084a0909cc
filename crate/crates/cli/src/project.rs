//! `project.json`: store location, default output directory and author.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ringforge_core::{Error, Result};

pub const FILE: &str = "project.json";
pub const DEFAULT_STORE: &str = ".ringstore";
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Project {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    /// Directory holding project.json; relative paths resolve against it.
    #[serde(skip)]
    pub dir: PathBuf,
}

impl Project {
    /// Reads `project.json` from `dir`, or returns defaults when absent.
    pub fn load(dir: &Path) -> Result<Project> {
        let path = dir.join(FILE);
        let mut p = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str::<Project>(&text)
                .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Project::default(),
            Err(e) => return Err(Error::io(path, e)),
        };
        p.dir = dir.to_path_buf();
        Ok(p)
    }

    pub fn save(&self) -> Result<()> {
        let path = self.dir.join(FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    }

    pub fn store_dir(&self, flag: Option<&Path>) -> PathBuf {
        match flag {
            Some(p) => p.to_path_buf(),
            None => self.dir.join(self.store.as_deref().unwrap_or(Path::new(DEFAULT_STORE))),
        }
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        match flag {
            Some(p) => p.to_path_buf(),
            None => self.dir.join(self.out_dir.as_deref().unwrap_or(Path::new(DEFAULT_OUT))),
        }
    }
}
