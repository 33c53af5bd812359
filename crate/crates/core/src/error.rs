use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::lp::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("image is not grayscale: {0}")]
    NotGrayscale(String),

    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("image {width}x{height} is not divisible into {block_size}x{block_size} blocks")]
    IndivisibleDimensions {
        width: usize,
        height: usize,
        block_size: usize,
    },

    #[error("invalid block size {0}: must be at least 2")]
    InvalidBlockSize(usize),

    #[error("invalid coefficient count {count}: must be in 1..{limit}")]
    InvalidCount { count: usize, limit: usize },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image too small for this metric: {width}x{height}, need at least {min}")]
    TooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("the scan baseline handles only a DC-only mask")]
    NotDcOnlyMask,

    #[error("recovery failed: solver finished with status {status:?} after {iterations} iterations ({detail})")]
    RecoveryFailed {
        status: SolveStatus,
        iterations: usize,
        detail: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }
}
