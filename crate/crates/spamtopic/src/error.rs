use std::path::PathBuf;

use spamtopic_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Config(String),
    #[error("stale artifact `{path}`: {message}")]
    StaleArtifact { path: PathBuf, message: String },
    #[error("`{path}` has format version {found}, expected {expected}")]
    Version { path: PathBuf, found: u32, expected: u32 },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Machine-readable category printed in the error line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
            Error::Format { .. } | Error::Version { .. } => "format",
            Error::StaleArtifact { .. } => "stale",
            Error::Core(e) => match e {
                CoreError::Config(_) | CoreError::InvalidConfig(_) => "config",
                _ => "data",
            },
            Error::Internal(_) => "internal",
        }
    }

    /// 2 for io/config problems, 3 for invalid data, 4 for broken invariants.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "io" | "config" => 2,
            "internal" => 4,
            _ => 3,
        }
    }
}
