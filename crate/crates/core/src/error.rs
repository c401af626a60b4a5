use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = KdicaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum KdicaError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}: {message}")]
    Parse { file: String, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-binary attribute value {value} in {file} at row {row}, column {col}")]
    NonBinaryAttribute {
        file: String,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("overlapping split: class {0} is in both train and test sets")]
    OverlappingSplit(i64),

    #[error("unknown class id {0}")]
    UnknownClass(i64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "right-hand-side matrix is not positive definite (ridge epsilon = {epsilon:e}); \
         retry with a larger epsilon"
    )]
    NotPositiveDefinite { epsilon: f64 },

    #[error("degenerate attribute: only one label value present")]
    DegenerateAttribute,

    #[error("AUC undefined: {0}")]
    UndefinedAuc(&'static str),

    #[error("bad model container: {0}")]
    Format(String),
}

impl KdicaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KdicaError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, message: impl Into<String>) -> Self {
        KdicaError::Parse {
            file: file.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical core rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, KdicaError::NotPositiveDefinite { .. })
    }
}
