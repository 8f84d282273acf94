use alloc::string::String;

/// Errors raised by model construction, fitting and prediction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (dimension {dim})")]
    NotPositiveDefinite { dim: usize },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    /// A mixture component's neighborhood is too small for a local fit.
    #[error(
        "component {component}: neighborhood has {count} points, at least {required} required"
    )]
    NeighborhoodTooSmall {
        component: usize,
        count: usize,
        required: usize,
    },

    #[error("no mixture component could be fitted: every neighborhood is below the minimum size")]
    Unfittable,
}

pub type Result<T> = core::result::Result<T, Error>;
