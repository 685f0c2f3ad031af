use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {index} evaluated to {value}")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("quadrature did not converge by order {max_order}; last two estimates {previous} and {last}")]
    QuadratureFailure {
        max_order: u32,
        previous: String,
        last: String,
    },

    #[error("positive definiteness unreachable at the escalation limit of {limit} bits")]
    PrecisionExhausted { limit: u32 },

    #[error("invalid precision configuration: {reason}")]
    InvalidPrecision { reason: String },

    #[error("not a finite decimal number: {text:?}")]
    InvalidDecimal { text: String },

    #[error("exponent list is empty")]
    EmptyExponents,

    #[error("exponent {value} is not positive")]
    NonPositiveExponent { value: String },

    #[error("duplicate exponent {value}")]
    DuplicateExponent { value: String },

    #[error("invalid interval: a = {a} must be strictly less than b = {b}, both finite")]
    InvalidInterval { a: String, b: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("cutoff {cutoff} out of range for dimension {dim}")]
    CutoffOutOfRange { cutoff: usize, dim: usize },

    #[error("weight {index} violates the decay bound |u| <= exp(-delta*lambda)")]
    WeightBound { index: usize },

    #[error("weight {index} is zero")]
    WeightZero { index: usize },

    #[error("weights {first} and {second} are equal; weights must be pairwise distinct")]
    WeightDuplicate { first: usize, second: usize },

    #[error("delta must be positive")]
    NonPositiveDelta,

    #[error("operation requires shift weights")]
    NonShiftWeights,

    #[error("rank indeterminate at working precision: singular value {value} straddles the threshold {threshold}")]
    RankIndeterminate { value: String, threshold: String },

    #[error("internal consistency violation: {what}")]
    InternalConsistency { what: String },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    JacobiStall { sweeps: usize },

    #[error("invalid partition: {reason}")]
    InvalidPartition { reason: String },

    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
