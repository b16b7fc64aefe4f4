use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] dwmd_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {reason}")]
    Csv {
        path: PathBuf,
        line: u64,
        column: String,
        reason: String,
    },
    #[error("{path}: {reason}")]
    CsvFile { path: PathBuf, reason: String },
    #[error("config {path}: {reason}")]
    Config { path: PathBuf, reason: String },
    #[error("invalid {name}: {reason}")]
    Invalid { name: &'static str, reason: String },
    #[error("all {count} seeds failed; first error: {first}")]
    AllSeedsFailed { count: usize, first: String },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Invalid { name, reason: reason.into() }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
