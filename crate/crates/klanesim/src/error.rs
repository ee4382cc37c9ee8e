use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("step {step}: {detail}")]
    Schedule { step: usize, detail: String },
    #[error("vertex {vertex} is missing {missing} blocks")]
    Incomplete { vertex: usize, missing: usize },
}

impl SimError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        SimError::Contract(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
