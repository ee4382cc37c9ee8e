use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{coll}/{imp} does not match the reference result")]
    Verification { coll: String, imp: String },
    #[error(transparent)]
    Comm(#[from] lanecoll::Error),
    #[error(transparent)]
    Sim(#[from] klanesim::SimError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("rank process failed: {0}")]
    Launch(String),
}

impl CliError {
    /// 2 for verification failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
