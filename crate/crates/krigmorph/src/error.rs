//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel length scale theta must be positive, got {0}")]
    NonPositiveTheta(f64),

    #[error("covariance distance must be nonnegative, got {0}")]
    NegativeDistance(f64),

    #[error("fixed geometry needs at least one primitive")]
    EmptyFixedGeometry,

    #[error("invalid fixed-geometry primitive: {0}")]
    InvalidPrimitive(String),

    #[error("point set must not be empty")]
    EmptyPointSet,

    #[error("{context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error(
        "matrix is numerically singular even with jitter {max_jitter:e}; \
         check for duplicated morphing nodes or nodes inside the fixed region"
    )]
    SingularMatrix { max_jitter: f64 },

    #[error(
        "bordered diagonal is not positive ({0:e}); \
         the new point has numerically zero posterior variance"
    )]
    ZeroPosteriorVariance(f64),

    #[error(
        "no selectable candidate: every surface point is a duplicate, lies in the \
         fixed region, or has prior variance below the floor"
    )]
    NoSelectableCandidate,

    #[error("invalid stopping rule: {0}")]
    InvalidStopRule(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "displacement fit is rank-deficient (normal matrix is singular); \
         the target points are too far from all morphing nodes"
    )]
    DegenerateFit,

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("{path}:{line}: {msg}")]
    MeshParse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("cannot infer mesh format for '{0}' (expected .vtk, .obj, or .xyz)")]
    UnknownFormat(String),

    #[error("mesh '{id}' has no representation in {format}: {msg}")]
    UnsupportedWrite {
        id: String,
        format: &'static str,
        msg: String,
    },

    #[error("parametrization file: {0}")]
    ParamFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
