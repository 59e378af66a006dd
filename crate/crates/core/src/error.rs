use thiserror::Error;

/// Errors raised by the zero-censored model and its supporting kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a composition needs at least 2 parts, got {0}")]
    TooFewParts(usize),

    #[error("part {index} is negative ({value})")]
    NegativePart { index: usize, value: f64 },

    #[error("part {0} is not finite")]
    NonFinite(usize),

    #[error("all parts are zero")]
    AllZero,

    #[error("{count} zero parts found; the model supports at most one zero per composition")]
    MultipleZeros { count: usize },

    #[error("parts sum to {sum}, expected 1")]
    NotUnitSum { sum: f64 },

    #[error("alpha must be non-zero")]
    ZeroAlpha,

    #[error("a composition with a zero part requires alpha > 0, got {0}")]
    ZeroPartNeedsPositiveAlpha(f64),

    #[error("the Jacobian is undefined at a zero part (index {0})")]
    ZeroPartInJacobian(usize),

    #[error("the Helmert sub-matrix needs D >= 2, got {0}")]
    HelmertDimension(usize),

    #[error("point lies outside the image of the transformation (component {0})")]
    OutOfImage(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("point is not outside the simplex")]
    NotOutside,

    #[error("tied minimum parts at indices {0} and {1}; projection would create two zeros")]
    TiedMinimum(usize, usize),

    #[error("the zero vector has no direction")]
    ZeroVector,

    #[error("sample is empty")]
    EmptySample,

    #[error("{n_interior} interior points cannot identify a {dim}-dimensional covariance (need at least {})", dim + 1)]
    TooFewInterior { n_interior: usize, dim: usize },

    #[error("log-diagonal coordinate {index} hit the bound ({value})")]
    LogDiagonalBound { index: usize, value: f64 },

    #[error("line search failed to find a finite objective value")]
    LineSearch,

    #[error("every expected count is below the floor {0}")]
    AllBelowFloor(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
