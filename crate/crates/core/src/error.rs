use thiserror::Error;

pub type Result<T, E = UccrlError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UccrlError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("extended value iteration did not converge after {iterations} iterations (last span {last_span:.3e})")]
    NonConvergence { iterations: usize, last_span: f64 },

    #[error("unsupported structure: {0}")]
    Unsupported(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl UccrlError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        UccrlError::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for UccrlError {
    fn from(e: std::io::Error) -> Self {
        UccrlError::Io(e.to_string())
    }
}
