use std::path::PathBuf;

use thiserror::Error;

/// First violated window invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("length: expected {expected} samples, found {found}")]
    Length { expected: usize, found: usize },
    #[error("finiteness: sample {index} has a non-finite {axis} value")]
    NonFinite { index: usize, axis: char },
    #[error("time: sample {index} is not strictly after sample {}", index - 1)]
    NonMonotoneTime { index: usize },
    #[error("label: class index {label} is outside the label set of {size}")]
    UnknownLabel { label: usize, size: usize },
}

impl ValidationError {
    /// Short name of the violated rule.
    pub fn rule(&self) -> &'static str {
        match self {
            ValidationError::Length { .. } => "length",
            ValidationError::NonFinite { .. } => "finiteness",
            ValidationError::NonMonotoneTime { .. } => "time",
            ValidationError::UnknownLabel { .. } => "label",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window {window}: {source}")]
    Validation {
        window: usize,
        #[source]
        source: ValidationError,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
