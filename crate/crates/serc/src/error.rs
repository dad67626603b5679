use thiserror::Error;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum SercError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("structural error in sentence {sentence}: {message}")]
    Structure { sentence: usize, message: String },

    #[error("validation error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Validation { line: Option<usize>, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("checkpoint corruption: {0}")]
    Corruption(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SercError>;

impl SercError {
    pub fn validation(message: impl Into<String>) -> Self {
        SercError::Validation {
            line: None,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI contract: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            SercError::Numerical(_) => 3,
            _ => 2,
        }
    }
}
