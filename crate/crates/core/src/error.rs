use thiserror::Error;

/// Errors raised by the solvers and the verification harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The requested time step violates the monotonicity bound of the scheme.
    #[error("CFL violation: dt = {dt:e} exceeds the monotone bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative solver hit its cap. `best` is the best feasible value seen.
    #[error("no convergence after {iterations} iterations (best feasible value {best})")]
    Convergence { iterations: usize, best: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
