use std::path::PathBuf;

use crate::ecdf::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,

    #[error("score at position {index} is not finite ({value})")]
    NonFiniteScore { index: usize, value: f64 },

    #[error("order statistic {k} out of range for a sample of size {n}")]
    IndexOutOfRange { k: usize, n: usize },

    #[error("no {0} scores in input")]
    MissingClass(Label),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} too large: {value:e} exceeds the budget of {limit:e}")]
    TooLarge {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("class mismatch: {0}")]
    ClassMismatch(String),

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 covers malformed input and configuration, 3 data that parses but
    /// cannot be evaluated, 4 a resource budget that would be exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingClass(_) | Error::ClassMismatch(_) | Error::EmptySample => 3,
            Error::TooLarge { .. } => 4,
            Error::NonFiniteScore { .. }
            | Error::IndexOutOfRange { .. }
            | Error::Domain(_)
            | Error::Config(_)
            | Error::Schema { .. }
            | Error::Io { .. }
            | Error::Json(_) => 2,
        }
    }
}
