use thiserror::Error;

use crate::solver::IterationTrace;

/// Errors raised by modular evaluation, the solver and the certificate builder.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point must have at least one coordinate")]
    EmptyPoint,

    #[error("non-finite coordinate {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("functional is not a modular: rho(x) = 0 at nonzero x = {witness:?}")]
    InvalidModular { witness: Vec<f64> },

    #[error("no finite bracket for the F-norm after {doublings} doublings")]
    NoBracket { doublings: usize },

    #[error("iteration diverged at step {step}")]
    Divergence {
        step: usize,
        trace: Box<IterationTrace>,
    },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("fixed point of the composed map is not fixed for the map itself: residual {residual:e} > tol {tol:e}")]
    Inconsistency { residual: f64, tol: f64 },

    #[error("orbit is unbounded: rho(omega - T^{step} omega) is infinite")]
    UnboundedOrbit { step: usize },
}

impl Error {
    /// True for caller mistakes (bad arguments) as opposed to mathematical failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. } | Error::EmptyPoint | Error::InvalidParameter(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
