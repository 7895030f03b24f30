use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("record {id}: {message}")]
    InvalidRecord { id: String, message: String },

    #[error("{count} malformed line(s) in {path}; first: {first}")]
    Malformed {
        path: PathBuf,
        count: usize,
        first: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("resource error in {path}: {message}")]
    Resource { path: PathBuf, message: String },

    #[error("record {id} is unlabelable: {reason}")]
    Unlabelable { id: String, reason: String },

    #[error("label {label:?} is not in the label map of head {head}")]
    UnknownLabel { label: String, head: String },

    #[error("input format mismatch: model expects {expected}, got {got}")]
    FormatMismatch { expected: String, got: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidRecord {
            id: id.into(),
            message: message.into(),
        }
    }
}
