use std::path::PathBuf;

use thiserror::Error;

use crate::diagnostics::Diagnostic;
use crate::expr::ParseError;
use crate::model::ElementKind;
use crate::store::VersionId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element is invalid: {} diagnostic(s), first: {}", .0.len(), .0.first().map(|d| d.to_string()).unwrap_or_default())]
    InvalidElement(Vec<Diagnostic>),

    #[error("assembly failed: {} diagnostic(s), first: {}", .0.len(), .0.first().map(|d| d.to_string()).unwrap_or_default())]
    Assembly(Vec<Diagnostic>),

    #[error("unknown version {0}")]
    UnknownVersion(VersionId),

    #[error("unknown reference `{0}`")]
    UnknownRef(String),

    #[error("invalid reference name `{0}`")]
    BadRefName(String),

    #[error("kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: ElementKind,
        found: ElementKind,
    },

    #[error("{parent} references missing child version {child}")]
    DanglingChild { parent: VersionId, child: VersionId },

    #[error("{0} is not referenced by the parent element")]
    NotReferenced(VersionId),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("evaluation cycle through {0}")]
    EvalCycle(String),

    #[error("workbook records model version {recorded}, expected {expected}")]
    VersionMismatch { recorded: String, expected: String },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("malformed element file: {0}")]
    Format(String),

    #[error("malformed workbook: {0}")]
    Workbook(String),

    #[error("store at {0} is locked by another writer")]
    Locked(PathBuf),

    #[error("no store found at {0}")]
    NoStore(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidElement(_) => "E_INVALID_ELEMENT",
            Error::Assembly(_) => "E_ASSEMBLY",
            Error::UnknownVersion(_) => "E_UNKNOWN_VERSION",
            Error::UnknownRef(_) => "E_UNKNOWN_REF",
            Error::BadRefName(_) => "E_BAD_REF_NAME",
            Error::KindMismatch { .. } => "E_KIND_MISMATCH",
            Error::DanglingChild { .. } => "E_DANGLING_CHILD",
            Error::NotReferenced(_) => "E_NOT_REFERENCED",
            Error::UnknownScenario(_) => "E_UNKNOWN_SCENARIO",
            Error::EvalCycle(_) => "E_EVAL_CYCLE",
            Error::VersionMismatch { .. } => "E_VERSION_MISMATCH",
            Error::Parse(_) => "E_PARSE",
            Error::Format(_) => "E_FORMAT",
            Error::Workbook(_) => "E_WORKBOOK",
            Error::Locked(_) => "E_LOCKED",
            Error::NoStore(_) => "E_NO_STORE",
            Error::Io { .. } => "E_IO",
            Error::Json(_) => "E_FORMAT",
        }
    }

    /// Diagnostics carried by the error, if any.
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            Error::InvalidElement(d) | Error::Assembly(d) => d,
            _ => &[],
        }
    }
}
