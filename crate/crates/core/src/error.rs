use std::io;

use thiserror::Error;

/// Errors raised by the chain, bounds, estimator and DLA routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its domain. `key` names the offending input.
    #[error("invalid {key}: {message}")]
    Validation { key: String, message: String },

    /// A configured work or memory cap would be exceeded.
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    /// An internal consistency check failed. Always a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } => 2,
            Error::ResourceCap(_) => 3,
            Error::Invariant(_) => 4,
            Error::Io { .. } | Error::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
