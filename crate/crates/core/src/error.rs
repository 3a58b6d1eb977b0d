use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("unknown word: {0}")]
    UnknownWord(String),

    #[error("degenerate sampler: no admissible word carries probability mass")]
    DegenerateSampler,

    #[error("infinite privacy loss: noise multiplier must be positive to charge the accountant")]
    InfinitePrivacyLoss,

    #[error("numerical blow-up at step {step}")]
    NumericalBlowUp { step: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
