use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] partialreg_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("{path}: {msg}")]
    Csv { path: String, msg: String },
    #[error("invalid argument: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
