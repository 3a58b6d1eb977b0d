use std::io;
use std::path::PathBuf;

/// Process exit codes.
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Input { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: dpugc_core::Error },
    #[error("{0}")]
    Core(#[from] dpugc_core::Error),
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(dpugc_core::Error::NumericalBlowUp { .. }) => EXIT_NUMERICAL,
            AppError::Output { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        AppError::Parse { path: path.into(), message: message.to_string() }
    }
}

pub type AppResult<T> = Result<T, AppError>;

pub(crate) fn read_to_string(path: &std::path::Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|source| AppError::Input { path: path.to_owned(), source })
}

pub(crate) fn write_file(path: &std::path::Path, contents: &[u8]) -> AppResult<()> {
    std::fs::write(path, contents).map_err(|source| AppError::Output { path: path.to_owned(), source })
}
