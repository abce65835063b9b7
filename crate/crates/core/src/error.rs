use thiserror::Error;

/// Errors produced by node generation, analysis and discretization routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("nodal spacing must be positive and finite, got {value} at {point:?}")]
    NonPositiveSpacing { point: Vec<f64>, value: f64 },

    #[error("empty domain: no interior point found in {draws} random draws")]
    EmptyDomain { draws: usize },

    #[error("point {point:?} lies outside the region covered by the index")]
    OutsideIndex { point: Vec<f64> },

    #[error("nearest-neighbour query on an empty index")]
    EmptyIndex,

    #[error("singular local interpolation system at node {center}")]
    SingularStencil { center: usize },

    #[error("degenerate point set: {0}")]
    Degenerate(String),

    #[error(
        "solver did not converge: relative residual {residual:e} after {iterations} iterations"
    )]
    NotConverged { residual: f64, iterations: usize },

    #[error("problem too large: {size} exceeds limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the request itself.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularStencil { .. }
                | Error::Degenerate(_)
                | Error::NotConverged { .. }
                | Error::NonPositiveSpacing { .. }
                | Error::EmptyDomain { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
