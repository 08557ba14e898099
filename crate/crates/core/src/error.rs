use thiserror::Error;

use crate::oneparam::FixedPointSolution;

pub type Result<T, E = DesignError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DesignError {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical method could not reach its accuracy target.
    #[error("accuracy error in {what}: estimated error {estimate:.3e}")]
    Accuracy { what: &'static str, estimate: f64 },

    /// A moment matrix is singular or too badly conditioned to invert.
    #[error("singular matrix (condition number {condition:.3e})")]
    Singular { condition: f64 },

    /// A criterion value is zero, negative or not finite.
    #[error("degenerate criterion value {0}")]
    Degenerate(f64),

    /// The multiplier solver stopped before meeting its tolerance. The best
    /// iterate, when one was formed, is attached.
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Option<Box<FixedPointSolution>>,
    },

    /// A dense finite-sample computation was requested above the size cap.
    #[error("N = {n} exceeds the configured cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("malformed density file: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> DesignError {
    DesignError::Domain(msg.into())
}
