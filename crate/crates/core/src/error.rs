use std::path::PathBuf;

use crate::features::FeatureGroup;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("line {line}: duplicate video_id `{video_id}`")]
    DuplicateId { video_id: String, line: usize },

    #[error("line {line}: invalid label: {message}")]
    InvalidLabel { line: usize, message: String },

    #[error("line {line}: {message}")]
    InvalidEntry { line: usize, message: String },

    #[error("video `{video_id}`: missing artifact `{artifact}`")]
    MissingArtifact { video_id: String, artifact: String },

    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("{what}: length mismatch ({left} vs {right})")]
    LengthMismatch {
        what: String,
        left: usize,
        right: usize,
    },

    #[error("{what}: non-finite value")]
    NonFinite { what: String },

    #[error("invalid bundle: {0}")]
    InvalidBundle(String),

    #[error("malformed embedding file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("class {class} has {count} rows, fewer than the {folds} folds requested")]
    ClassTooSmall {
        class: u8,
        count: usize,
        folds: usize,
    },

    #[error("k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("unknown feature group `{0}`")]
    UnknownGroup(String),

    #[error("missing feature part {0}")]
    MissingPart(FeatureGroup),

    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
