use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("stencil order {order} exceeds the configured maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0} (only 1 and 2 are supported)")]
    UnsupportedDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field is not smooth at the requested point: {0}")]
    NonSmooth(String),

    #[error("jet order {order} exceeds the maximum {max}")]
    JetOrderOverflow { order: usize, max: usize },

    #[error("lattice window mismatch: {0}")]
    WindowMismatch(String),

    #[error("kernel evaluated at y = 0")]
    SingularPoint,

    #[error("kernel sample is not positive: K = {value}")]
    NonPositiveKernel { value: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("quadrature tolerance not reached after {subdivisions} subdivisions (error estimate {error:e})")]
    ToleranceNotReached { subdivisions: usize, error: f64 },

    #[error("field is unbounded; the tail of the operator integral diverges")]
    UnboundedField,

    #[error("step h = {h} too large for the stencil footprint (needs h * (order + 1) < {limit})")]
    StepTooLarge { h: f64, limit: f64 },

    #[error("missing entry: {0}")]
    MissingEntry(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
