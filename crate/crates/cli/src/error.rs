use thiserror::Error;

/// Failure classes of the scenario runner, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("calibration unachievable: {0}")]
    Unachievable(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) | CliError::Io(_) => 3,
            CliError::Unachievable(_) => 4,
        }
    }
}

impl From<densecode::Error> for CliError {
    fn from(e: densecode::Error) -> Self {
        match e {
            densecode::Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            densecode::Error::UnachievableTarget { .. } => CliError::Unachievable(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}
