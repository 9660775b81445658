use thiserror::Error;

/// Errors surfaced by the library. Remote operations never fail; these are
/// raised by local generation, configuration and parsing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("invalid interval: left bound is not before right bound")]
    InvalidInterval,
    #[error("several policy produced more than {cap} instances")]
    SeveralBlowup { cap: usize },
    #[error("illegal combination: {0}")]
    IllegalCombo(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed wire data: {0}")]
    Wire(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::PreconditionViolation(msg.into())
}
