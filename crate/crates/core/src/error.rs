use std::path::PathBuf;

use crate::model::ModelViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library. The variants map onto three broad
/// categories (parameters, data, numerics) that the CLI turns into exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid model: {0}")]
    InvalidModel(#[from] ModelViolation),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter(_) => ErrorKind::Config,
            Error::Degenerate(_) => ErrorKind::Numeric,
            Error::Data(_) | Error::InvalidModel(_) | Error::Parse { .. } | Error::Io { .. } => {
                ErrorKind::Data
            }
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
