use std::path::PathBuf;

use wcprox_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// Bad arguments, unreadable or malformed files.
    pub const USAGE: u8 = 1;
    /// A parameter validator rejected the configuration.
    pub const REJECTED: u8 = 2;
    /// Non-finite iterates, failed inversion, non-monotone trace or a failed property.
    pub const NUMERICAL: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Malformed(String),
    #[error("{message}\n{limits}")]
    Rejected { message: String, limits: String },
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Io { .. } | Self::Malformed(_) => exit::USAGE,
            Self::Rejected { .. } => exit::REJECTED,
            Self::Numerical(_) => exit::NUMERICAL,
            Self::Core(e) => match e {
                CoreError::BoundViolation(_) | CoreError::Infeasible(_) | CoreError::UnsupportedStep(_) => {
                    exit::REJECTED
                }
                CoreError::NonFinite(_) | CoreError::InversionCap { .. } => exit::NUMERICAL,
                _ => exit::USAGE,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
