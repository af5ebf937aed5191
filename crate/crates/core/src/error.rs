use std::path::PathBuf;

/// Everything that can go wrong in the library.
///
/// The display strings of the numerical variants are stable; the CLI maps
/// them to exit codes and tests match on them.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("eigen failure: {0}")]
    EigenFailure(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank deficient: singular value {index} is {value:e}")]
    RankDeficient { index: usize, value: f64 },

    #[error("fast path undefined: the FFT path requires the convolutional branch")]
    FastPathUndefined,

    #[error("divergence: non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("length mismatch in {path}: {reason}")]
    LengthMismatch { path: PathBuf, reason: String },

    #[error("non-finite value in {path} at row {row}")]
    NonFinite { path: PathBuf, row: usize },

    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum { stored: u64, computed: u64 },

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
