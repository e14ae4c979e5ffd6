use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: cannot parse {value:?} in numeric column `{column}`")]
    ParseNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: empty value in target column `{column}`")]
    MissingTarget { row: usize, column: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid schema: {0}")]
    Schema(String),

    /// The data cannot support the requested computation (single class,
    /// too few rows for a split, and similar).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("refusing to overwrite existing file {0} (pass --force)")]
    WouldOverwrite(PathBuf),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
