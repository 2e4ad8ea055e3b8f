use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{}:{line}: {message}", file.display())]
    MalformedRow {
        file: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{context}: {message}")]
    InvariantViolation { context: String, message: String },

    #[error("need score {0} outside 0..=3")]
    ScoreOutOfRange(i64),

    #[error("disadaptation level {0} outside 0..=3")]
    LevelOutOfRange(i64),

    #[error("cannot standardize an empty slice")]
    EmptyInput,

    #[error("window of {window} samples exceeds fragment of {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("no spectrogram carries class {0}")]
    EmptyClass(u8),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training labels contain a single class")]
    SingleClassInput,

    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },

    #[error("need at least {needed} samples, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("model expects {expected} features of kind {expected_kind}, got {actual} of kind {actual_kind}")]
    FeatureKindMismatch {
        expected_kind: String,
        expected: usize,
        actual_kind: String,
        actual: usize,
    },

    #[error("need at least 2 records, got {0}")]
    TooFewRecords(usize),

    #[error("could not draw a training split containing both classes after {0} attempts")]
    SingleClassTrain(usize),

    #[error("record has no parts to score")]
    EmptyRecord,

    #[error("truth labels contain a single class")]
    SingleClassTruth,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("record {session_id} has {len} samples; at least {min} are required")]
    RecordTooShort {
        session_id: String,
        len: usize,
        min: usize,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier printed by the CLI before the human message.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MissingFile(_) => "MissingFile",
            Error::MalformedRow { .. } => "MalformedRow",
            Error::InvariantViolation { .. } => "InvariantViolation",
            Error::ScoreOutOfRange(_) => "ScoreOutOfRange",
            Error::LevelOutOfRange(_) => "LevelOutOfRange",
            Error::EmptyInput => "EmptyInput",
            Error::WindowTooLarge { .. } => "WindowTooLarge",
            Error::EmptyClass(_) => "EmptyClass",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SingleClassInput => "SingleClassInput",
            Error::NonFiniteFeature { .. } => "NonFiniteFeature",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::CorruptModel(_) => "CorruptModel",
            Error::FeatureKindMismatch { .. } => "FeatureKindMismatch",
            Error::TooFewRecords(_) => "TooFewRecords",
            Error::SingleClassTrain(_) => "SingleClassTrain",
            Error::EmptyRecord => "EmptyRecord",
            Error::SingleClassTruth => "SingleClassTruth",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::RecordTooShort { .. } => "RecordTooShort",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Io { .. } => "IoFailure",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invariant(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvariantViolation {
            context: context.into(),
            message: message.into(),
        }
    }
}
