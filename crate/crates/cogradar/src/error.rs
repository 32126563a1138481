//! Crate-wide error type.

use thiserror::Error;

/// Unified error for configuration, numerical, and I/O failures.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A scenario file failed to parse; carries field and line context.
    #[error("scenario parse error at line {line}: field `{field}`: {message}")]
    ScenarioParse {
        line: usize,
        field: String,
        message: String,
    },

    /// An iterative solver exhausted its iteration budget.
    #[error("iteration limit reached: {0}")]
    IterationLimit(String),

    /// Filesystem failure while reading scenarios or writing reports.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Shorthand for [`Error::InvalidArgument`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
