use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point outside the oracle domain: {0}")]
    DomainViolation(String),

    #[error("solver failed after {iterations} iterations (residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("sketch failure: {0}")]
    SketchFailure(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
