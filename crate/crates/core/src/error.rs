use thiserror::Error;

/// Errors raised by the library. Mathematical outcomes (an inequality that
/// fails, a precondition that is not met) are reported as values, not here.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("{func} is undefined at x = {x}")]
    Domain { func: String, x: f64 },

    #[error("function precondition failed: {0}")]
    Precondition(String),

    #[error("invalid function spec `{spec}`: {reason}")]
    FnSpec { spec: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NotConverged { sweeps: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimMismatch { left, right })
    }
}
