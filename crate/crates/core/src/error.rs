use thiserror::Error;

/// Errors raised by the prediction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the domain of an operation (negative glucose, bad ratio, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A dataset file could not be read or parsed.
    #[error("load error{}: {message}", location(*.row, .column.as_deref()))]
    Load {
        row: Option<usize>,
        column: Option<String>,
        message: String,
    },

    #[error("preprocessing error: {0}")]
    Preprocess(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("split error: {0}")]
    Split(String),

    /// Invalid algorithm configuration (SMOTE k, forest size, grid axes, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called on an object in the wrong state (e.g. an untrained forest).
    #[error("state error: {0}")]
    State(String),

    #[error("feature selection error: {0}")]
    Selection(String),

    #[error("cross-validation error: {0}")]
    CrossValidation(String),

    #[error("model artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn location(row: Option<usize>, column: Option<&str>) -> String {
    match (row, column) {
        (Some(r), Some(c)) => format!(" at row {r}, column '{c}'"),
        (Some(r), None) => format!(" at row {r}"),
        (None, Some(c)) => format!(" in column '{c}'"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn load(message: impl Into<String>) -> Self {
        Error::Load { row: None, column: None, message: message.into() }
    }

    pub(crate) fn load_at(row: usize, column: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Load { row: Some(row), column: Some(column.into()), message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
