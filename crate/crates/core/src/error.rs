use alloc::string::String;

use crate::tensor::Shape;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: Shape, actual: Shape },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("fixed-point inversion did not reach tolerance {tol:e} within {iterations} iterations")]
    InversionCap { iterations: usize, tol: f64 },

    #[error("prox oracle argmin on the search boundary; radius {radius} too small")]
    BoundaryArgmin { radius: f64 },

    #[error("proximal step with stepsize {0} is not available for this regularizer")]
    UnsupportedStep(f64),

    #[error("parameter bound violated: {0}")]
    BoundViolation(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
