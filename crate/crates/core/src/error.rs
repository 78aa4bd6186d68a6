use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor was given a parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An index past the last representable term of a sequence.
    #[error("index {index} out of range (valid up to {limit})")]
    IndexOutOfRange { index: u64, limit: u64 },

    /// A scale fell outside the domain (0, A] of a dimension function.
    #[error("scale {scale:e} outside gauge domain (0, {bound:e}]")]
    DomainViolation { scale: f64, bound: f64 },

    /// Tree depth beyond the supported desk scale.
    #[error("depth {depth} exceeds supported maximum {max}")]
    DepthTooLarge { depth: u32, max: u32 },

    /// Tree depth too shallow for the requested estimate.
    #[error("depth {depth} is below the minimum {min} required here")]
    InsufficientDepth { depth: u32, min: u32 },

    /// Not enough usable grid points for a limit estimate.
    #[error("only {points} usable grid points, need at least {required}")]
    InsufficientData { points: usize, required: usize },

    /// The tails demanded by a synthesis target do not form a valid gap sequence.
    #[error("synthesis infeasible at index {index}: {reason}")]
    SynthesisInfeasible { index: u64, reason: String },

    /// A sequence or gauge spec that could not be parsed.
    #[error("spec parse error: {0}")]
    SpecParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
