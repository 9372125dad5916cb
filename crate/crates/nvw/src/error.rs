use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Fixed-point iteration at a marching cell did not settle.
    #[error("step failure at cell (i={i}, j={j}): residual {residual:.3e} after {iterations} iterations")]
    StepFailure {
        i: usize,
        j: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("not applicable: {0}")]
    NotApplicable(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
