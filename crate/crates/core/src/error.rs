use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point} is outside the universe of {query} query")]
    DomainMismatch { query: &'static str, point: String },

    #[error("no exact mean for a {query} query over a {population} population")]
    UnsupportedMean {
        query: &'static str,
        population: &'static str,
    },

    #[error("bit-vector length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty input")]
    Empty,

    #[error("sample-split chunks exhausted after {0} answers")]
    ChunksExhausted(usize),

    #[error("all {0} attack rounds already issued")]
    RoundsExhausted(usize),

    #[error("no query is awaiting an answer")]
    NoPendingQuery,

    #[error("a query is already awaiting an answer")]
    AnswerPending,

    #[error("attack incomplete: {done} of {total} rounds answered")]
    AttackIncomplete { done: usize, total: usize },

    #[error("base query value {0} at index {1} is not a bit")]
    NonBitQuery(f64, usize),

    #[error("permutation prefix contains duplicate elements")]
    DuplicateElements,

    #[error("decoded block value needs {bits} bits but the block holds {capacity}")]
    BlockOutOfRange { bits: u64, capacity: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Configuration and parameter errors are caller mistakes; everything
    /// else happened while running.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter(_))
    }
}
