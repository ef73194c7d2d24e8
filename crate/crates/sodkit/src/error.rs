use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    /// Malformed file contents; `offset` is the byte where decoding stopped.
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] sodkit_core::Error),
    #[error("{path}: {source}")]
    In { path: PathBuf, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Self::Format {
            offset: offset as u64,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Attaches the file a decoding error came from.
    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            e @ (Self::Io { .. } | Self::In { .. }) => e,
            e => Self::In {
                path: path.to_path_buf(),
                source: Box::new(e),
            },
        }
    }

    /// Process exit status: 1 for bad configuration, 2 for everything
    /// about the data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::In { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
