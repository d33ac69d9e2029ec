//! Error type shared by every layer of the simulator.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("register has already been measured")]
    AlreadyMeasured,

    #[error("position {0} was lost in the channel and cannot be measured")]
    LostPosition(usize),

    #[error("register is empty")]
    EmptyRegister,

    #[error("key is shorter than the message ({key} < {msg})")]
    KeyTooShort { key: usize, msg: usize },

    #[error("one-time pad key reused within a session")]
    KeyReuse,

    #[error("undecodable codeword: {0}")]
    Undecodable(String),

    #[error("voter {0} has already registered")]
    AlreadyRegistered(usize),
    #[error("duplicate tag presented to the counter")]
    DuplicateTag,

    #[error("dimension {0} exceeds the exact-enumeration budget")]
    DimensionOverflow(usize),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("invalid phase transition from {from} to {to}")]
    PhaseTransition { from: String, to: String },

    #[error("protocol aborted: {0}")]
    Aborted(String),

    #[error("transcript incomplete: {0}")]
    IncompleteTranscript(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
