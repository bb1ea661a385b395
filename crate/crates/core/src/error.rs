use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the tensor-power laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension n = {0}: need n >= 2")]
    InvalidDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Dense storage or the conditioned engine's Gaussian store would exceed
    /// the configured memory cap.
    #[error("{what} needs {required} bytes, above the {cap}-byte cap{hint}")]
    Resource {
        what: String,
        required: u128,
        cap: u64,
        hint: &'static str,
    },

    #[error("numerical overflow at step {step}: {detail}")]
    Overflow { step: usize, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code for this error: 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
