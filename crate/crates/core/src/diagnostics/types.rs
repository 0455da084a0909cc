use std::fmt;

use serde::{Deserialize, Serialize};

use super::code::{Code, Severity};

/// Where a diagnostic points: an element, a path inside it and optionally a period.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub struct Location {
    pub element: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u32>,
}

impl Location {
    pub fn new(element: impl Into<String>, path: impl Into<String>) -> Self {
        Location {
            element: element.into(),
            path: path.into(),
            period: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub location: Location,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, location: Location, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: code.severity(),
            location,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    fn sort_key(&self) -> (&str, &str, Code, Option<u32>, &str) {
        (
            &self.location.element,
            &self.location.path,
            self.code,
            self.location.period,
            &self.message,
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}", self.code, self.location.element)?;
        if !self.location.path.is_empty() {
            write!(f, " {}", self.location.path)?;
        }
        if let Some(p) = self.location.period {
            write!(f, " period {p}")?;
        }
        write!(f, "] {}", self.message)
    }
}

/// Sorts by (element, path, code) and removes exact duplicates.
pub fn normalize(diags: &mut Vec<Diagnostic>) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    diags.dedup();
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
