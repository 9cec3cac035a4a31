use thiserror::Error;

use crate::multi_index::MultiIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A matrix or identity needed a moment that the sequence does not carry.
    #[error("missing moment {alpha} (sequence has max order {max_order})")]
    MissingMoment { alpha: MultiIndex, max_order: usize },

    #[error("region is unbounded: {0}")]
    Unbounded(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    /// The exponential weight does not decay on nested truncation boxes.
    #[error("polynomial is not in cone C (exp(-g) not integrable): {0}")]
    NotIntegrable(String),

    #[error("degenerate system: {0}")]
    DegenerateSystem(String),

    /// The kernel system has no solution or several at the decisive order.
    #[error("assumptions violated: {0}")]
    AssumptionsViolated(String),

    #[error("matrix is numerically singular: {0}")]
    Singular(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::MissingMoment { .. } => "missing-moment",
            Error::Unbounded(_) => "unbounded-region",
            Error::QuadratureNonConvergence(_) => "quadrature-non-convergence",
            Error::NotIntegrable(_) => "not-in-cone-c",
            Error::DegenerateSystem(_) => "degenerate-system",
            Error::AssumptionsViolated(_) => "assumptions-violated",
            Error::Singular(_) => "singular-matrix",
            Error::NotPositiveDefinite => "not-positive-definite",
            Error::Io(_) => "io",
            Error::Format(_) => "format",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
