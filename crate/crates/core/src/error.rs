use alloc::string::String;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("duplicate subject id `{0}`")]
    DuplicateSubject(String),
    #[error("duplicate audio path `{0}`")]
    DuplicateAudioPath(String),
    #[error("mmse {mmse} for subject `{subject}` outside [0, 30]")]
    MmseOutOfRange { subject: String, mmse: i64 },
    #[error("unknown subject `{0}`")]
    UnknownSubject(String),
    #[error("subject `{0}` has no feature rows")]
    SubjectWithoutRows(String),
    #[error("signal too short: need {needed} samples, got {got}")]
    SignalTooShort { needed: usize, got: usize },
    #[error("signal is silent")]
    SilentSignal,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("column mismatch: {0}")]
    ColumnMismatch(String),
    #[error("classification data has a single class")]
    SingleClass,
    #[error("non-finite target at row {0}")]
    NonFiniteTarget(usize),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("transcript: line {line}: {message}")]
    Transcript { line: usize, message: String },
    #[error("no utterances by speaker `{0}`")]
    NoUtterances(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: alloc::boxed::Box::new(self),
        }
    }
}
