use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("unknown builtin problem `{0}`")]
    UnknownBuiltin(String),

    #[error("builtin `{id}` supports derivatives up to order {max}, requested {requested}")]
    UnsupportedOrder { id: String, max: usize, requested: usize },

    #[error("problem `{0}` is not registered as strongly convex")]
    NotStronglyConvex(String),

    #[error("model minimization failed: {0}")]
    Subsolver(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
