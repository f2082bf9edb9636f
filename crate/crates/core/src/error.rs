use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("weights not normalized: total weight {0}")]
    NotNormalized(String),

    #[error("not measure preserving in coordinate {coord}: preimage of [{lo}, {hi}) has length {length}")]
    NotMeasurePreserving {
        coord: usize,
        lo: String,
        hi: String,
        length: String,
    },

    #[error("dense-square hypothesis violated: zero-density fraction {0} is not below 1/4")]
    HypothesisViolated(String),

    #[error("rationalization failed: best deviation {rho} does not beat {bound} after {attempts} attempts")]
    Rationalize {
        rho: f64,
        bound: f64,
        attempts: usize,
    },

    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { name: String, column: usize },

    #[error("function `{name}` expects {expected} argument(s), got {got} (column {column})")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
        column: usize,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("problem too large for exhaustive search: {0}")]
    Budget(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
