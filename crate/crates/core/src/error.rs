use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum IrtError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} = {value} lies outside the ability domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("no ability reaches probability {p} (lower asymptote c = {c})")]
    NoSolution { p: f64, c: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("no feasible anchor intervals")]
    EmptyResult,

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = IrtError> = std::result::Result<T, E>;

impl IrtError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        IrtError::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        IrtError::Config(msg.into())
    }
}
