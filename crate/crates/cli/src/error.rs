use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error(transparent)]
    Core(#[from] vbe_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for domain failures, 2 for usage and configuration errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(vbe_core::Error::CapExceeded { .. }) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
