use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent arguments (mismatched sizes, kinds or grids).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("degenerate Hessian at gradient {0:?}")]
    Degenerate(Vec<f64>),

    #[error("nonlinear solve did not converge in {iterations} iterations (best scaled residual {best_residual:.3e})")]
    NonConvergence { iterations: usize, best_residual: f64 },

    #[error("time step {level} failed: {source}")]
    StepFailed {
        level: usize,
        #[source]
        source: Box<Error>,
    },
}
