use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnlsError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite state at step {step}: {what}")]
    NonFinite { step: usize, what: String },

    #[error("interval [{start}, {end}] too rough: bisection depth {depth} exhausted")]
    IntervalTooRough { start: f64, end: f64, depth: usize },

    #[error("run failed: {0}")]
    Runtime(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl SnlsError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SnlsError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for usage/config problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            SnlsError::Config(_) | SnlsError::InvalidParameter(_) | SnlsError::Json(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, SnlsError>;
