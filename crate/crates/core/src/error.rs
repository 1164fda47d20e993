use thiserror::Error;

/// Failures raised by the geometry and algebra routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("function `{name}` expects {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("derivative order {requested} exceeds the supported maximum {max}")]
    OrderOverflow { requested: usize, max: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate point: {0}")]
    Degenerate(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
