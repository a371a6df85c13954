use std::io;
use std::path::{Path, PathBuf};

use iapvq::imageio::FormatError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Algorithm(iapvq::Error),
    #[error("digest mismatch: expected {expected}, found {actual}")]
    Digest { expected: String, actual: String },
    #[error("replay mismatch: {0}")]
    Replay(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Parse { .. } => 3,
            CliError::Algorithm(_) => 4,
            CliError::Digest { .. } | CliError::Replay(_) => 5,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Attributes a library error to the file it came from.
    pub fn from_file(path: &Path) -> impl FnOnce(iapvq::Error) -> CliError + '_ {
        move |e| match e {
            iapvq::Error::Format(FormatError::DigestMismatch { expected, actual }) => {
                CliError::Digest { expected, actual }
            }
            iapvq::Error::Format(f) => CliError::Parse {
                path: path.to_path_buf(),
                message: f.to_string(),
            },
            other => CliError::Algorithm(other),
        }
    }
}

impl From<iapvq::Error> for CliError {
    fn from(e: iapvq::Error) -> Self {
        match e {
            iapvq::Error::Format(FormatError::DigestMismatch { expected, actual }) => {
                CliError::Digest { expected, actual }
            }
            other => CliError::Algorithm(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
