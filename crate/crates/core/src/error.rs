use std::io;

use thiserror::Error;

use crate::point_process::PointId;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown point id {0}")]
    UnknownPoint(PointId),

    #[error("point {0} has no mother")]
    NoMother(PointId),

    #[error("{0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
