use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("resource cap: {0}")]
    Cap(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Io { .. } => 2,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Library errors inside a field of the config.
    pub fn at(path: &str, e: mdim_core::Error) -> Self {
        match e {
            mdim_core::Error::CapExceeded { .. } | mdim_core::Error::OracleTooLarge { .. } => {
                CliError::Cap(format!("{path}: {e}"))
            }
            other => CliError::Config(format!("{path}: {other}")),
        }
    }
}

impl From<mdim_core::Error> for CliError {
    fn from(e: mdim_core::Error) -> Self {
        match e {
            mdim_core::Error::CapExceeded { .. } | mdim_core::Error::OracleTooLarge { .. } => CliError::Cap(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
