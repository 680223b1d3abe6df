use std::path::PathBuf;

/// Errors produced anywhere in the library.
///
/// Variants carry enough context (channel, bin, byte offset, component) to
/// locate the problem without re-running with extra logging.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("window of {window} samples is longer than signal of {len}")]
    WindowTooLong { window: usize, len: usize },

    #[error("zero variance in channel {channel}, frequency bin {bin}")]
    ZeroVariance { channel: usize, bin: usize },

    #[error("covariance has rank {rank}, cannot extract {requested} components")]
    RankDeficient { rank: usize, requested: usize },

    #[error("FastICA did not converge after {iterations} iterations (last delta {delta:.3e})")]
    NotConverged { iterations: usize, delta: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("component index {index} out of range ({n} components)")]
    ComponentOutOfRange { index: usize, n: usize },

    #[error("mixing-matrix column {0} is all zero")]
    ZeroColumn(usize),

    #[error("degenerate epoch: {0}")]
    DegenerateEpoch(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("electrode {0:?} not in montage")]
    UnknownElectrode(String),

    #[error("montage error: {0}")]
    Montage(String),

    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: u64, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error comes from a malformed specification or input rather
    /// than from a failure during computation. The CLI maps these to exit 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_) | Error::Config(_) | Error::Montage(_) | Error::UnknownElectrode(_)
        )
    }
}
