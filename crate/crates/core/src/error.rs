use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument or configuration value is outside its valid domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Random function generation kept producing unusable trees.
    #[error("function generation exhausted after {attempts} attempts")]
    GenerationExhausted { attempts: usize },

    /// Malformed serialized expression or document.
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    /// The sampled objective values are constant; the function cannot be characterized.
    #[error("degenerate sample: objective values are constant")]
    Degenerate,

    /// Feature names do not match the expected schema.
    #[error("feature schema mismatch (missing: {missing:?}, extra: {extra:?})")]
    Schema {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    /// Non-finite loss encountered while training a network.
    #[error("training diverged at epoch {epoch}, batch {batch}")]
    TrainingDiverged { epoch: usize, batch: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that originate from the file system rather than from input validation.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Csv(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
