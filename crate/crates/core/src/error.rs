use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("model file, line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("unsupported model format version {found:?} (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },

    #[error("variable index {index} out of range for {n_vars} variables")]
    IndexOutOfRange { index: usize, n_vars: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid edge ({0}, {0}): endpoints must differ")]
    SelfLoop(usize),

    #[error("edge ({lo}, {hi}) is not active in the model")]
    EdgeNotActive { lo: usize, hi: usize },

    #[error("edge ({lo}, {hi}) is already active in the model")]
    EdgeAlreadyActive { lo: usize, hi: usize },

    #[error("cluster count {clusters} must lie in [1, {params}]")]
    ClusterCount { clusters: usize, params: usize },

    #[error("requested {requested} edges but only {available} are available")]
    TooManyEdges { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite objective during optimization (step {step})")]
    NonFinite { step: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
