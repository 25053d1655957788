use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by what the caller can do about them: `Parse` and
/// `Validation` point at bad input data, `InvalidArgument` at a bad call,
/// `Numerical` at a computation that left its domain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{rule}{}", city.map(|c| format!(" (city {c})")).unwrap_or_default())]
    Validation { rule: String, city: Option<usize> },

    #[error("{0} panel required")]
    MissingPanel(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("isolated vertices: {0:?}")]
    IsolatedVertices(Vec<usize>),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn validation(rule: impl Into<String>, city: Option<usize>) -> Self {
        Error::Validation {
            rule: rule.into(),
            city,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
