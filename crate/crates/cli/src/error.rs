use std::path::PathBuf;

use occlusion_meter::error::{CalibrationError, ConfigError, IngestError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: IngestError },
    #[error("config {}: {message}", path.display())]
    ConfigFile { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{}: line {line}: {message}", path.display())]
    Labels {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("calibration: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Write(String),
}

impl CliError {
    /// 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Write(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Write(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Write(e.to_string())
    }
}
