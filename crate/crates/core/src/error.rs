use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected sample rate {expected} Hz, found {found} Hz")]
    SampleRate { expected: u32, found: u32 },

    #[error("frame count mismatch: {what} has {found} frames, expected {expected}")]
    FrameMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("overlapping words on channel {channel}: {first:?} and {second:?}")]
    OverlappingWords {
        channel: u8,
        first: (f64, f64),
        second: (f64, f64),
    },

    #[error("scoring window [{start_s:.3}, {end_s:.3}) s falls outside the stream")]
    WindowOutOfRange { start_s: f64, end_s: f64 },

    #[error("both classes must be present (found only {0})")]
    SingleClass(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("validation and test partitions share session {0:?}")]
    PartitionOverlap(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("bad sidecar: {0}")]
    Sidecar(String),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
