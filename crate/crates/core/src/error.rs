use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("duplicate sites {0} and {1}")]
    DuplicateSites(usize, usize),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("Newton linear solve broke down at iteration {iteration}: {reason}")]
    NewtonBreakdown { iteration: usize, reason: String },

    #[error("transport problem infeasible: {0}")]
    Infeasible(String),

    #[error("geometry not aligned with the mesh: {0}")]
    Misaligned(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
