use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The state violates a statevector invariant (usually normalization).
    #[error("state invariant violated: {0}")]
    StateInvariant(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Lanczos did not reach the requested residual; carries the best estimate found.
    #[error("no convergence after {restarts} restarts (best e0 = {best_e0}, residual = {residual:e})")]
    Convergence {
        restarts: usize,
        best_e0: f64,
        residual: f64,
    },

    /// Carries the trace recorded up to the failing evaluation.
    #[error("cost function returned a non-finite value at iteration {iteration}")]
    NonFiniteCost {
        iteration: usize,
        trace: Box<crate::optimizer::OptimizationTrace>,
    },

    #[error("undefined: {0}")]
    Undefined(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
