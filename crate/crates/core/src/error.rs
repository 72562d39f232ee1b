use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("message text is empty")]
    EmptyMessage,
    #[error("message text is {len} characters, limit is 255")]
    MessageTooLong { len: usize },
    #[error("invalid display name: {0}")]
    InvalidDisplayName(&'static str),
    #[error("status is {len} characters, limit is 64")]
    InvalidStatus { len: usize },
    #[error("invalid handle {0:?}")]
    InvalidHandle(String),
    #[error("invalid group id {0:?}")]
    InvalidGroupId(String),
    #[error("a private conversation needs two distinct handles")]
    SelfScope,
    #[error("no free handle after {0} attempts")]
    HandleSpaceExhausted(usize),
}
