use thiserror::Error;

/// Errors raised by the emulation and statistics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: left has {left} elements, right has {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("noise model degenerate: sigma must be > 0, got {0}")]
    DegenerateSigma(f64),

    #[error("negative logit margin {0}")]
    NegativeMargin(f64),

    #[error("not a probability vector: {0}")]
    NotNormalized(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("trial index {index} out of range for {n_trials} trials")]
    TrialOutOfRange { index: usize, n_trials: usize },

    #[error("report error: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, Error>;
