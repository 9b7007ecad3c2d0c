use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Each variant corresponds to a violated precondition; numerical "failures"
/// of a verified identity are never errors, they are reported as residuals.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grade mismatch: expected {expected}, got {found}")]
    GradeMismatch { expected: usize, found: usize },

    #[error("grade overflow: {left} + {right} exceeds ambient dimension {dim}")]
    GradeOverflow { left: usize, right: usize, dim: usize },

    #[error("invalid grade {grade} for ambient dimension {dim}")]
    InvalidGrade { grade: usize, dim: usize },

    #[error("coefficient array has length {found}, expected C({dim},{grade}) = {expected}")]
    CoefficientLength {
        dim: usize,
        grade: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("metric is not symmetric (relative asymmetry {0:e})")]
    AsymmetricMetric(f64),

    #[error("metric is not positive definite (smallest eigenvalue {0:e})")]
    IndefiniteMetric(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid exponent p = {0}; need p >= 1")]
    InvalidExponent(f64),

    #[error("mollifier radius {radius} is under-resolved (minimum {min})")]
    UnderResolvedMollifier { radius: f64, min: f64 },

    #[error("empty test-form family")]
    EmptyTestFamily,

    #[error("invalid radius {0}")]
    InvalidRadius(f64),

    #[error("unknown map `{0}`")]
    UnknownMap(String),

    #[error("invalid parameters for `{map}`: {reason}")]
    InvalidParams { map: String, reason: String },

    #[error("point leaves the target domain")]
    OutsideDomain,

    #[error("all grid nodes are branch-degenerate")]
    AllNodesDegenerate,

    #[error("the conformal exponent n/k is undefined for k = 0")]
    ZeroGradeExponent,

    #[error("local index computation failed: {0}")]
    IndexFailure(String),

    #[error("normal neighborhood radius too large: {0}")]
    RadiusTooLarge(String),

    #[error("partition of unity fails to cover the manifold at a sample point")]
    PartitionOfUnity,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
