use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pathx_core::Error),
    #[error("sparql: {0}")]
    Sparql(String),
    #[error("extraction incomplete, {} ids failed: {}", failed.len(), failed.join(", "))]
    PartialExtraction { failed: Vec<String> },
    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
