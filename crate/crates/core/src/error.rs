use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs violate a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A point or parameter lies outside the domain where a routine is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Samples fall outside the grid of a test function.
    #[error("grid coverage: {0}")]
    Coverage(String),

    /// The grid leaves too much probability mass of the target outside.
    #[error("tail mass outside grid: {0}")]
    TailMass(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by bad input rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Domain(_) | Error::Coverage(_) | Error::TailMass(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
