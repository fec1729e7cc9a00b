use thiserror::Error;

/// Errors raised by oracles, solvers, samplers and audits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-smooth point: {0}")]
    NonSmoothPoint(String),
    #[error("point lies outside the model domain")]
    OutsideDomain,
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: expected {expected}, got {got}"
        )));
    }
    Ok(())
}
