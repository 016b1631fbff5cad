use thiserror::Error;

/// Errors produced by the reconstruction library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate in point")]
    NonFinite,

    #[error("degenerate data: all joint points are identical, supply an explicit bandwidth")]
    DegenerateData,

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("sample set is empty")]
    EmptySampleSet,

    #[error("configuration was never observed")]
    UnseenConfiguration,

    #[error("zero kernel mass: query point is too far from all observations")]
    ZeroMass,

    #[error("distributions are defined over different sample sets")]
    SampleSetMismatch,

    #[error("chi-square matching requires raw count vectors")]
    MissingCounts,

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("partitions cover different observation index sets")]
    IndexSetMismatch,

    #[error("data is not sequential")]
    NonSequentialData,

    #[error("observation index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("transition symbols are required")]
    MissingSymbols,

    #[error("series too short: length {len} needs more than {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("field too small for the requested light cones")]
    FieldTooSmall,

    #[error("image too small: {width}x{height}, need at least 5x5")]
    ImageTooSmall { width: usize, height: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
