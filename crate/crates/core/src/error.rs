use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaiError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("value {value} out of range: {what}")]
    Range { what: &'static str, value: f64 },
    #[error("arm index {arm} out of range for {arms} arms")]
    Index { arm: usize, arms: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("budget error: {0}")]
    Budget(String),
    #[error("infinite complexity: at least one gap is zero")]
    InfiniteComplexity,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing policy `{0}` in results")]
    MissingPolicy(String),
}

pub type Result<T, E = BaiError> = std::result::Result<T, E>;
