use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("runs overlap at pixel {pixel}")]
    Overlap { pixel: usize },

    #[error("run [{start}, {end}) exceeds vector length {len}")]
    Range { start: usize, end: usize, len: usize },

    #[error("parse error at token {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("metrics undefined: {0}")]
    UndefinedMetrics(String),

    #[error("label {label} exceeds class count {classes}")]
    LabelRange { label: u32, classes: u32 },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(position: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: msg.into(),
        }
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    /// Broad category used for process exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } | Error::Format { .. } => ErrorCategory::Io,
            Error::Capacity(_) => ErrorCategory::Capacity,
            _ => ErrorCategory::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Io,
    Capacity,
}
