use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution parameter: {0}")]
    InvalidDistribution(String),

    #[error("latent coordinate {index} = {value} outside [0, 1]")]
    LatentOutOfRange { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("slice sampler exceeded {0} shrinkage iterations")]
    SliceExhausted(usize),

    #[error("adaptive RE-SMC did not reach the target threshold within {0} stages")]
    StageLimit(usize),

    #[error("invalid threshold schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("resampling from an empty accepted set")]
    EmptyAcceptedSet,

    #[error("initial state has zero prior density")]
    InitialOutsidePrior,

    #[error("initial likelihood estimate was zero after {0} attempts")]
    ZeroInitialLikelihood(usize),

    #[error("degenerate pilot: {0}")]
    DegeneratePilot(String),

    #[error("particle tuning failed: {0}")]
    TuningFailed(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
