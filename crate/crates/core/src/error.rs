use thiserror::Error;

/// Errors raised across the allocation, simulation and harness layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid problem dimensions: {0}")]
    InvalidDims(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter `{name}` out of range: {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("volume {volume} outside 0..={max}")]
    VolumeOutOfRange { volume: u32, max: u32 },
    #[error("marginals must sum to an integer, got {0}")]
    NonIntegralMass(f64),
    #[error("marginal {index} = {value} outside [0, 1)")]
    InvalidMarginal { index: usize, value: f64 },
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("scenario config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{0} requires continuous allocations")]
    ContinuousOnly(String),
    #[error("empty trace")]
    EmptyTrace,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
