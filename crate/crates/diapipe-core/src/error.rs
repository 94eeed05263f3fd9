use alloc::string::String;

/// Errors produced by the diarization primitives.
///
/// Every variant describes a rejected input; none of the core operations
/// panic on bad data.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("zero-norm embedding at index {0}")]
    ZeroNormEmbedding(usize),
    #[error("inconsistent frame hop: expected {expected} s, got {actual} s")]
    InconsistentFrameHop { expected: f64, actual: f64 },
    #[error("RTTM parse error at line {line}: {message}")]
    RttmParse { line: usize, message: String },
    #[error("speech segment ({onset:.3}, {offset:.3}) not covered by any window")]
    UncoveredSpeech { onset: f64, offset: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = core::result::Result<T, Error>;
