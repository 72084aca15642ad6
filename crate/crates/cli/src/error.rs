use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] keel::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Check(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                keel::Error::Parse(_) => "parse",
                keel::Error::Inconsistent(_) => "inconsistent",
                keel::Error::Degree(_) => "degree",
                keel::Error::LabelCount(_) | keel::Error::Label { .. } | keel::Error::Mismatch(..) => "labels",
                keel::Error::UnstablePartition(_) | keel::Error::InvalidTree(_) | keel::Error::NoSuchEdge => "tree",
                keel::Error::InvalidFlags(_) => "flags",
                keel::Error::Precondition(_) => "precondition",
            },
            CliError::Usage(_) => "usage",
            CliError::Check(_) => "check-failed",
            CliError::Io { .. } => "io",
            CliError::Json(_) => "json",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string() } })
    }
}

pub type CliResult<T> = Result<T, CliError>;
