use std::path::PathBuf;

use twinxfer_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("selftest failed")]
    SelftestFailed,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for configuration errors, 3 for insufficient statistics, 4 for IO,
    /// 1 for a failed selftest.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                CoreError::InsufficientStatistics { .. } | CoreError::EmptySelection { .. } => 3,
                CoreError::Estimation(_) => 3,
                _ => 2,
            },
            CliError::Io { .. } | CliError::Format { .. } => 4,
            CliError::SelftestFailed => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        let path = PathBuf::new();
        match e.into_kind() {
            csv::ErrorKind::Io(source) => CliError::Io { path, source },
            other => CliError::Format { path, message: format!("{other:?}") },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
