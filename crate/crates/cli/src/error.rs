use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] vgr_core::Error),

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing upstream artifact {} (run `vgr {producer}` first)", path.display())]
    Missing {
        path: PathBuf,
        producer: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for I/O problems, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Missing { .. } => 2,
            CliError::Core(vgr_core::Error::Io { .. } | vgr_core::Error::MissingFixture(_)) => 2,
            _ => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}
