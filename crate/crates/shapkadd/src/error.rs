use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit code for malformed input or flags.
pub const EXIT_USAGE: i32 = 2;
/// Process exit code when the value function itself fails.
pub const EXIT_GAME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] shapkadd_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// `3` for failures of the value function, `2` for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(
                shapkadd_core::Error::Evaluation(_) | shapkadd_core::Error::NonFinite { .. },
            ) => EXIT_GAME,
            _ => EXIT_USAGE,
        }
    }
}
