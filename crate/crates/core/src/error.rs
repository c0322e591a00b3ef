use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate sample id {0:?} in manifest")]
    DuplicateSampleId(String),

    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),

    #[error("class {class} has {found} samples, at least {required} required")]
    ClassTooSmall {
        class: crate::Label,
        found: usize,
        required: usize,
    },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("row has {found} features, model expects {expected}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("requested {requested} of {available} ranked features")]
    LengthExceedsRanking { requested: usize, available: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DuplicateSampleId(_) => "duplicate_sample_id",
            Error::Unreadable { .. } => "unreadable_path",
            Error::Unwritable { .. } => "unwritable_path",
            Error::Config(_) => "config",
            Error::UnknownAttribute(_) => "unknown_attribute",
            Error::ClassTooSmall { .. } => "class_too_small",
            Error::SingleClass => "single_class",
            Error::ArityMismatch { .. } => "arity_mismatch",
            Error::LengthExceedsRanking { .. } => "length_exceeds_ranking",
            Error::Invariant(_) => "invariant",
            Error::Format(_) => "format",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
