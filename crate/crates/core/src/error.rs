//! Error types shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("value out of range in {context}: {value}")]
    OutOfRange { context: &'static str, value: f64 },

    #[error("partition is missing on one or both vectors")]
    MissingPartition,

    #[error("partitions are incompatible: {0}")]
    IncompatiblePartition(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unknown builtin field `{0}`")]
    UnknownField(String),

    #[error("path segment passes through a singularity of the field")]
    SingularityOnPath,

    #[error("environment generation failed after {attempts} attempts: no reachable positive reward")]
    EnvGeneration { attempts: usize },

    #[error("stepped from a terminal state {state}")]
    SteppedFromTerminal { state: usize },

    #[error("teacher policy undefined for state {state}")]
    TeacherUndefined { state: usize },

    #[error("idx data error in {path}: {kind}")]
    Idx { path: PathBuf, kind: IdxError },

    #[error("config error: {0}")]
    Config(String),

    #[error("config parse error in {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// What went wrong while parsing an IDX file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdxError {
    #[error("bad magic number {got:#010x}, expected {expected:#010x}")]
    BadMagic { got: u32, expected: u32 },
    #[error("truncated file: needed {needed} bytes, had {had}")]
    Truncated { needed: usize, had: usize },
    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("unsupported image shape {rows}x{cols}, expected 28x28")]
    BadShape { rows: usize, cols: usize },
}
