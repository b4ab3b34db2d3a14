use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] reconlab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("acceptance check failed: {0}")]
    Check(String),
}

impl HarnessError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) | HarnessError::Io(_) => 3,
            HarnessError::Check(_) => 4,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
