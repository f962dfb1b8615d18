use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("unknown label {value:?} at line {line}")]
    UnknownLabel { value: String, line: u64 },

    #[error("duplicate id {id:?} at line {line}")]
    DuplicateId { id: String, line: u64 },

    #[error("empty id at line {line}")]
    EmptyId { line: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {0} has too few members: {1}")]
    TooFewMembers(Label, String),

    #[error("every document is empty")]
    EmptyCorpus,

    #[error("document is empty")]
    EmptyDocument,

    #[error("negative feature weight {weight} at feature {feature}")]
    NegativeWeight { feature: usize, weight: String },

    #[error("feature index {index} out of range for {dim} features")]
    FeatureOutOfRange { index: usize, dim: usize },

    #[error("no examples to train on")]
    EmptyTrainingSet,

    #[error("at least two classes are required, found {0}")]
    TooFewClasses(usize),

    #[error("non-finite objective at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("k = {k} neighbors requested from {points} points")]
    NeighborCount { k: usize, points: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },

    #[error("unknown comment {0:?}")]
    UnknownComment(String),

    #[error("unknown annotator {0:?}")]
    UnknownAnnotator(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
