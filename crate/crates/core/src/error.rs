use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FitsError>;

#[derive(Debug, Error)]
pub enum FitsError {
    #[error("invalid length {len}: {reason}")]
    InvalidLength { len: usize, reason: &'static str },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("empty split: {0}")]
    EmptySplit(&'static str),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FitsError {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        FitsError::Shape(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FitsError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: &std::path::Path, e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => FitsError::io(path, source),
            other => FitsError::Parse {
                row: 1,
                column: 0,
                message: format!("{other:?}"),
            },
        }
    }
}
