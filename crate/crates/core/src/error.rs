use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModalError>;

#[derive(Debug, Error)]
pub enum ModalError {
    /// A caller-supplied parameter is outside its valid range.
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("shape error: expected dimension {expected}, found {found}")]
    Shape { expected: usize, found: usize },
    /// Input data is inconsistent with what the operation needs.
    #[error("data error: {0}")]
    Data(String),
    /// An environment or density violates the modal-structure assumptions.
    #[error("validation error: {0}")]
    Validation(String),
    /// An experiment configuration failed to parse; the message carries the
    /// line and column.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ModalError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        ModalError::Parameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        ModalError::Data(msg.into())
    }
}
