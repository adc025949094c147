use thiserror::Error;

/// Errors raised by the readout library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReadoutError {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A truncated count distribution lost more probability than allowed.
    #[error("truncated {what} keeps mass {mass:.3e}, below the required {required:.3e}")]
    MassDeficit {
        what: &'static str,
        mass: f64,
        required: f64,
    },

    /// The count grid of the quantum receiver would exceed the configured cap.
    #[error("count grid needs about {cells:.3e} cells, above the cap of {cap:.3e}")]
    BudgetExceeded { cells: f64, cap: f64 },

    /// A Gram matrix had a clearly negative eigenvalue.
    #[error("Gram matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    /// An iterative refinement stopped at its cap before reaching the tolerance.
    #[error("no convergence after k = {k}: gap {gap:.3e} bits above tolerance {tol:.3e}")]
    NonConvergence { k: usize, gap: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, ReadoutError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ReadoutError::InvalidInput(msg.into()))
}
