//! Error type shared by every module in the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected {:?}, found {:?}", ascii(expected), ascii(found))]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported {format} version {found} (expected {expected})")]
    VersionMismatch {
        format: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("truncated {format} file: payload ends inside the {section} section")]
    Truncated {
        format: &'static str,
        section: &'static str,
    },

    #[error("{format} file has {extra} trailing bytes after the payload")]
    TrailingBytes { format: &'static str, extra: usize },

    #[error("non-finite value in {what} at flat index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("negative value {value} in {what} at flat index {index}")]
    Negative {
        what: &'static str,
        index: usize,
        value: f32,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("label {label} at sample {sample} is outside [0, {n_classes})")]
    LabelOutOfRange {
        sample: usize,
        label: u32,
        n_classes: usize,
    },

    #[error("class index {class} is outside [0, {n_classes})")]
    ClassOutOfRange { class: usize, n_classes: usize },

    #[error("feature dump {tag:?} has no labels")]
    MissingLabels { tag: String },

    #[error("no training samples for classes {0:?}")]
    MissingClasses(Vec<usize>),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

fn ascii(bytes: &[u8; 4]) -> String {
    bytes.escape_ascii().to_string()
}
