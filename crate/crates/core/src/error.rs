use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("carrier phrase for intent `{intent}` references undeclared slot `{slot}`")]
    UnknownSlotReference { intent: String, slot: String },
    #[error("carrier phrase references undeclared intent `{0}`")]
    UnknownIntent(String),
    #[error("intent `{0}` declared more than once")]
    DuplicateIntent(String),
    #[error("slot `{0}` declared more than once")]
    DuplicateSlot(String),
    #[error("gazetteer for slot `{slot}` contains `{value}` more than once")]
    DuplicateGazetteerValue { slot: String, value: String },
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),
    #[error("slot `{0}` is used by a carrier phrase but its gazetteer is empty")]
    EmptyGazetteerUsed(String),

    #[error("empty input")]
    EmptyInput,
    #[error("invalid IOB sequence at position {position}: {reason}")]
    InvalidIob { position: usize, reason: String },
    #[error("spans overlap at token {0}")]
    OverlappingSpans(usize),
    #[error("span ({start}, {end}) out of bounds for {len} tokens")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("invalid tag `{0}`")]
    InvalidTag(String),
    #[error("malformed embedding line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("loss became non-finite")]
    NonFiniteLoss,
    #[error("model expects gazetteer features of width {0}")]
    MissingGazFeatures(usize),
    #[error("label `{0}` is not in the label space")]
    UnknownLabel(String),
    #[error("corpus labels are not covered by the model label space: {0}")]
    LabelSpaceMismatch(String),
    #[error("corpus is empty or too small: {0}")]
    EmptyCorpus(String),
    #[error("source domain `{0}` appears more than once; its labels would collide")]
    LabelCollision(String),
    #[error("configuration violation: {0}")]
    ConfigViolation(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
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
