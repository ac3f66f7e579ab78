use std::path::{Path, PathBuf};

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {message}", path.display())]
    File { path: PathBuf, message: String },

    #[error(transparent)]
    Solver(#[from] spectral_descent::Error),
}

impl CliError {
    pub const EXIT_ERROR: i32 = 1;
    pub const EXIT_USAGE: i32 = 64;
    pub const EXIT_FILE: i32 = 66;

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn file(path: &Path, message: impl ToString) -> Self {
        CliError::File {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => Self::EXIT_USAGE,
            CliError::File { .. } => Self::EXIT_FILE,
            CliError::Solver(_) => Self::EXIT_ERROR,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
