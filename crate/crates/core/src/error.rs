use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {0}: malformed datapoints line")]
    MalformedLine(usize),
    #[error("datapoints file has no data lines")]
    EmptyFile,
    #[error("line {0}: invalid label {1:?}")]
    InvalidLabel(usize, String),
    #[error("{0} frames but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("region index {0} outside 0..9")]
    InvalidRegion(usize),
    #[error("frame must have 300 finite coordinates")]
    InvalidFrame,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("class {0} has no samples")]
    MissingClass(usize),
    #[error("test fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("output count {0} outside 2..=9")]
    InvalidOutputCount(usize),
    #[error("input is not finite")]
    NonFiniteInput,
    #[error("expected input of length {expected}, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("unknown loss kind {0:?}")]
    LossUndefined(String),
    #[error("parameter shapes do not match")]
    ShapeMismatch,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid multiclass size {0}; expected 3, 5, 7 or 9")]
    InvalidK(usize),
    #[error("unknown reference key {0:?}")]
    UnknownReferenceKey(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid model file: {0}")]
    Model(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::Parse { path: path.into(), source: Box::new(self) }
    }
}
