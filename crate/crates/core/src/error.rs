use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training diverged at step {step}: loss is {loss}; try a lower learning rate")]
    NonFiniteLoss { step: usize, loss: f64 },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad user input rather than internal failure.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::DimensionMismatch { .. }
                | Error::Csv(_)
                | Error::Json(_)
                | Error::ModelFile(_)
                | Error::NotFound(_)
                | Error::Conflict(_)
                | Error::Io { .. }
        )
    }
}
