use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative time: {0}")]
    NegativeTime(String),
    #[error("invalid time value: {0}")]
    InvalidTime(String),
    #[error("invalid frame rate: {0}")]
    InvalidFrameRate(String),
    #[error("invalid turn: {0}")]
    InvalidTurn(String),
    #[error("turns not sorted by start time at index {0}")]
    UnsortedTurns(usize),
    #[error("{role} turns {first} and {second} overlap")]
    SameRoleOverlap {
        role: &'static str,
        first: usize,
        second: usize,
    },
    #[error("invalid segment track: {0}")]
    InvalidTrack(String),
    #[error("empty conversation")]
    EmptyConversation,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid FSQ levels: {0}")]
    InvalidLevels(String),
    #[error("code out of range: {0}")]
    CodeOutOfRange(String),
    #[error("index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("invalid token space: {0}")]
    InvalidTokenSpace(String),
    #[error("invalid builder input: {0}")]
    Builder(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("alignment failed: {0}")]
    Alignment(String),
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated: {0}")]
    Truncated(String),
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("invalid metrics input: {0}")]
    Metrics(String),
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
