//! Error type shared by every module of the crate.

use std::path::PathBuf;

use crate::wav::WavError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(
        "window too short for layer: input length {in_length} < effective kernel extent {extent}"
    )]
    WindowTooShort { in_length: usize, extent: usize },

    #[error("channel mismatch: expected {expected} channels, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("feature-count mismatch: expected {expected} features, got {actual}")]
    FeatureCountMismatch { expected: usize, actual: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid slice count {requested}: must be in 1..={max}")]
    InvalidSliceCount { requested: usize, max: usize },

    #[error("no slice count fits a budget of {budget_bytes} bytes (finest tiling peaks at {best_bytes})")]
    BudgetUnreachable {
        budget_bytes: usize,
        best_bytes: usize,
    },

    #[error("stale plan: {0}")]
    StalePlan(String),

    #[error("empty window")]
    EmptyWindow,

    #[error("invalid detection config: {0}")]
    InvalidDetectionConfig(String),

    #[error("non-positive shunt resistance {0} ohm")]
    NonPositiveResistance(f64),

    #[error("corrupt model: checksum {actual:#010x} does not match manifest {expected:#010x}")]
    CorruptModel { expected: u32, actual: u32 },

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("unsupported version: model format version {0}")]
    UnsupportedVersion(i64),

    #[error(transparent)]
    Wav(#[from] WavError),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// I/O failure tied to the file it concerns.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
