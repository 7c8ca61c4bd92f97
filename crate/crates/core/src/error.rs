use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch, expected {expected} but found {found}")]
    ShapeMismatch { op: &'static str, expected: String, found: String },

    #[error("{0}: empty input")]
    EmptyInput(&'static str),

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    InvalidToken { id: usize, vocab_size: usize },

    #[error("invalid token sequence: {0}")]
    InvalidSequence(String),

    #[error("sequence body of {len} tokens exceeds max_len {max_len}")]
    SequenceTooLong { len: usize, max_len: usize },

    #[error("image feature `{id}` has {found} values, expected {expected}")]
    FeatureLength { id: String, expected: usize, found: usize },

    #[error("image feature `{0}` contains a non-finite value")]
    NonFiniteFeature(String),

    #[error("search space of {sequences} sequences exceeds the enumeration bound of {limit}")]
    SearchSpaceTooLarge { sequences: u128, limit: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("unsupported format version {found:?}, expected {expected:?}")]
    UnsupportedVersion { expected: &'static str, found: String },

    #[error("feature dimension {0} in file header, expected 2048")]
    BadDimension(u32),

    #[error("file truncated while reading {0}")]
    Truncated(&'static str),

    #[error("{0} trailing bytes after the last record")]
    TrailingData(usize),

    #[error("duplicate image id `{0}`")]
    DuplicateId(String),

    #[error("image id `{0}` is longer than 65535 bytes")]
    IdTooLong(String),

    #[error("malformed caption line {line}: expected `image_id<TAB>caption`")]
    MalformedCaptionLine { line: usize },

    #[error("cannot split {ids} ids into {parts} non-empty parts")]
    NotEnoughIds { ids: usize, parts: usize },

    #[error("bad checkpoint header: {0}")]
    BadHeader(String),

    #[error("checkpoint is missing tensor `{0}`")]
    MissingTensor(String),

    #[error("checkpoint contains unknown tensor `{0}`")]
    UnknownTensor(String),

    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    TensorShape { name: String, expected: Vec<usize>, found: Vec<usize> },

    #[error("checkpoint config does not match: {0}")]
    ConfigMismatch(String),

    #[error("unknown image id `{0}`")]
    UnknownImage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn shape(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
