use thiserror::Error;

/// Errors produced by the rate computations and their inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid labeling: {0}")]
    InvalidLabeling(String),

    #[error("bits per symbol m = {0} is outside the supported range 1..=8")]
    BitsOutOfRange(u32),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid SNR: {0}")]
    InvalidSnr(String),

    #[error("L-value {l} lies outside the support of the conditional density for bit {bit}")]
    OutsideSupport { l: f64, bit: u8 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical integration failed: {0}")]
    Integration(String),

    #[error("rate curve is not monotone: rate drops from {prev} to {next} between {prev_db} dB and {next_db} dB")]
    NonMonotoneCurve {
        prev_db: f64,
        next_db: f64,
        prev: f64,
        next: f64,
    },

    #[error("target rate {target} outside the achievable range ({lo}, {hi})")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("rate ranges differ: [0, {left}] vs [0, {right}]; only rates with the same range can be compared")]
    RangeMismatch { left: f64, right: f64 },

    #[error("failed to parse constellation file: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
