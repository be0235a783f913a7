use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("value {0} lies beyond the support of the distribution")]
    BeyondSupport(u64),
    #[error("mismatched group parameters: {0}")]
    GroupMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("membership undetermined: {0}")]
    Undetermined(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("witness search exhausted its budget: {0}")]
    SearchExhausted(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
