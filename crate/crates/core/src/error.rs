use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },

    #[error("{context}: {message}")]
    Validation { context: String, message: String },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("step {step} has zero probability under every state")]
    ZeroProbabilityStep { step: usize },

    #[error("type {type_id} received no expected {what} counts (restart advised)")]
    DegenerateType { type_id: usize, what: &'static str },

    #[error("all {runs} restarts degenerated")]
    AllRunsDegenerate { runs: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("length mismatch for {context}: {left} vs {right}")]
    LengthMismatch { context: String, left: usize, right: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            context: context.into(),
            message: message.into(),
        }
    }
}
