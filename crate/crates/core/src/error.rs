use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("phase finding did not converge: best residual {residual:e} after {iterations} iterations")]
    PhaseFinding { residual: f64, iterations: usize },
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("fit failed: {reason} (residual {residual:e})")]
    Fit { reason: String, residual: f64 },
    #[error("amplitude lost: branch norm {0:e}")]
    AmplitudeLoss(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
