use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Invalid configuration or expert input (seeds, lexicon, mappings).
    #[error("config error: {0}")]
    Config(String),

    /// A caller violated an operation's precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Input data cannot support the requested operation.
    #[error("data error: {0}")]
    Data(String),

    /// A generator, embedder, sentiment or classifier backend failed.
    #[error("backend `{backend}` failed: {message}")]
    Backend { backend: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn backend(backend: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Backend {
            backend: backend.into(),
            message: message.into(),
        }
    }
}
