use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type. Variants map onto the process exit codes used by
/// the CLI: config errors exit 2, data errors exit 3, numerical failures 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The clustering-loss gradient is undefined because the relevant
    /// eigenvalues are too close (or the graph is effectively split into more
    /// than K components). Training skips the clustering term for the batch.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Shape(_) | Error::Io { .. } => 3,
            Error::Numeric(_) | Error::DegenerateSpectrum(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
