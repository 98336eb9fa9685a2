use std::path::PathBuf;

/// Errors produced anywhere in the forecasting engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("series of length {len} is too short (need at least {required})")]
    SeriesTooShort { len: usize, required: usize },

    #[error("non-finite observation at index {index}")]
    NonFiniteInput { index: usize },

    #[error("level {level} out of range 1..={levels}")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("resolution 2^{resolution} exceeds {samples} samples")]
    ResolutionTooFine { resolution: u32, samples: usize },

    #[error("shape mismatch in {op}: expected {expected}, found {found}")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("{op}: input length {len} is shorter than the required {required}")]
    InputTooShort {
        op: &'static str,
        len: usize,
        required: usize,
    },

    #[error("non-finite loss{}", match batch { Some(b) => format!(" at batch {b}"), None => String::new() })]
    NonFiniteLoss { batch: Option<usize> },

    #[error("non-finite gradient for parameter `{param}` at element {index}")]
    NonFiniteGradient { param: String, index: usize },

    #[error("wavelet pyramid has no level {level}")]
    MissingPyramidLevel { level: usize },

    #[error("stack {stack} needs the previous stack's input and backcast")]
    MissingPredecessor { stack: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("non-numeric cell at row {row}: `{value}`")]
    NonNumericCell { row: usize, value: String },

    #[error("series is empty")]
    EmptySeries,

    #[error("{partition} partition has {len} observations, need at least {required}")]
    PartitionTooShort {
        partition: &'static str,
        len: usize,
        required: usize,
    },

    #[error("training segment has zero variance")]
    ZeroVariance,

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("checkpoint config hash {found} does not match the current config {expected}")]
    ConfigMismatch { expected: String, found: String },

    #[error("ensemble member with seed {seed} failed: {source}")]
    EnsembleMember {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad inputs or configuration rather than by the computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. } => false,
            Error::EnsembleMember { source, .. } => source.is_validation(),
            _ => true,
        }
    }
}
