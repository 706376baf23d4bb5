use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Parameter,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("column {0:?} not found")]
    MissingColumn(String),
    #[error("series is empty")]
    EmptySeries,
    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("observed series is constant; R² is undefined")]
    ConstantSeries,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("expected a distribution over {expected} variable(s), got {got}")]
    Arity { expected: String, got: usize },
    #[error("admissibility integral diverges (function does not have zero mean)")]
    NotAdmissible,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Row { .. }
            | Error::MissingColumn(_)
            | Error::EmptySeries
            | Error::TooShort { .. }
            | Error::LengthMismatch { .. }
            | Error::ConstantSeries
            | Error::InvalidDistribution(_) => ErrorKind::Input,
            Error::InvalidParameter(_) | Error::InvalidGrid(_) | Error::Arity { .. } => {
                ErrorKind::Parameter
            }
            Error::NotAdmissible | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
