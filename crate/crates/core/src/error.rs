use thiserror::Error;

/// Errors raised by communicators, layouts and collectives.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (bad rank, short buffer, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("reduction `{0}` is not commutative")]
    NonCommutative(&'static str),

    #[error("ranks disagree on {what}")]
    Inconsistent { what: &'static str },

    #[error("peer {peer} disconnected")]
    Disconnected { peer: usize },

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("malformed frame: {0}")]
    Frame(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::contract(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
