use thiserror::Error;

/// Errors produced by grid construction, filter synthesis, and the
/// measurement-analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is outside its physical domain.
    #[error("invalid {name} = {value}: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Operands were built on different frequency grids.
    #[error("frequency grids of the operands do not match")]
    GridMismatch,

    /// Expected and actual sample counts disagree.
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// An amplitude with zero norm cannot be normalized.
    #[error("cannot normalize an amplitude with zero norm")]
    ZeroNorm,

    /// An input state must be normalized before use.
    #[error("state has norm² = {norm_sqr}, expected 1 within {tolerance}")]
    NotNormalized { norm_sqr: f64, tolerance: f64 },

    /// Outcome weight fell below the smallest meaningful weight.
    #[error("outcome unreachable: weight {weight:e} is below the floor {floor:e}")]
    OutcomeUnreachable { weight: f64, floor: f64 },

    /// Filter samples violate the two-port unitarity conditions.
    #[error("filter violates unitarity: residual {residual:e} at ω = {omega}")]
    NotUnitary { residual: f64, omega: f64 },

    /// A mode basis cannot be used for the requested operation.
    #[error("invalid mode basis: {0}")]
    InvalidBasis(String),

    /// Index addressed a port, mode, or sample that does not exist.
    #[error("index {index} out of range for {what} of length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    /// Time samples must be strictly increasing.
    #[error("time samples must be strictly increasing")]
    NonMonotonicTimes,

    /// A dense two-photon tabulation would exceed the memory guard.
    #[error("grid of {n} points exceeds the dense two-photon limit of {max}")]
    GridTooLarge { n: usize, max: usize },

    /// Scenario configuration could not be parsed or is inconsistent.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A numerical self-check failed beyond its threshold.
    #[error("validation: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
