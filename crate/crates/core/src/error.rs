use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("state outside the admissible domain: {0}")]
    DomainViolation(String),
    #[error("matrix is not skew-symmetric (max |a_ij + a_ji| = {worst:e})")]
    NotSkew { worst: f64 },
    #[error("nonlinear solve did not converge after {iterations} iterations (residual {residual_norm:e}): {reason}")]
    SolverFailure {
        iterations: usize,
        residual_norm: f64,
        reason: String,
    },
    #[error("trajectory has no steps")]
    EmptyTrajectory,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
