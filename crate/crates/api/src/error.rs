use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;

use anonroom_core::wire::ErrorBody;
use anonroom_core::DomainError;
use anonroom_store::StoreError;

/// Every failure the HTTP surface can report. The variant name is the
/// `error` code sent to clients.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown or revoked token")]
    BadToken,
    #[error("session expired, join again")]
    SessionExpired,
    #[error("message text is empty")]
    EmptyMessage,
    #[error("message is {0} characters, limit is 255")]
    MessageTooLong(usize),
    #[error("{0}")]
    InvalidDisplayName(&'static str),
    #[error("status is {0} characters, limit is 64")]
    InvalidStatus(usize),
    #[error("cannot open a private conversation with yourself")]
    SelfScope,
    #[error("history limit {0} outside 1..=200")]
    InvalidLimit(usize),
    #[error("utc offset {0} outside -840..=840 minutes")]
    InvalidOffset(i64),
    #[error("no participant has handle {0:?}")]
    UnknownRecipient(String),
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
    #[error("join the group before sending to it")]
    NotGroupMember,
    #[error("not a participant of this conversation")]
    NotAuthorized,
    #[error("cursor {cursor} is ahead of the log (max {max})")]
    CursorAhead { cursor: u64, max: u64 },
    #[error("{0}")]
    StorageFailure(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) => "BadRequest",
            ApiError::BadToken => "BadToken",
            ApiError::SessionExpired => "SessionExpired",
            ApiError::EmptyMessage => "EmptyMessage",
            ApiError::MessageTooLong(_) => "MessageTooLong",
            ApiError::InvalidDisplayName(_) => "InvalidDisplayName",
            ApiError::InvalidStatus(_) => "InvalidStatus",
            ApiError::SelfScope => "SelfScope",
            ApiError::InvalidLimit(_) => "InvalidLimit",
            ApiError::InvalidOffset(_) => "InvalidOffset",
            ApiError::UnknownRecipient(_) => "UnknownRecipient",
            ApiError::UnknownGroup(_) => "UnknownGroup",
            ApiError::NotGroupMember => "NotGroupMember",
            ApiError::NotAuthorized => "NotAuthorized",
            ApiError::CursorAhead { .. } => "CursorAhead",
            ApiError::StorageFailure(_) => "StorageFailure",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_)
            | ApiError::EmptyMessage
            | ApiError::MessageTooLong(_)
            | ApiError::InvalidDisplayName(_)
            | ApiError::InvalidStatus(_)
            | ApiError::SelfScope
            | ApiError::InvalidLimit(_)
            | ApiError::InvalidOffset(_) => StatusCode::BAD_REQUEST,
            ApiError::BadToken => StatusCode::UNAUTHORIZED,
            ApiError::NotGroupMember | ApiError::NotAuthorized => StatusCode::FORBIDDEN,
            ApiError::UnknownRecipient(_) | ApiError::UnknownGroup(_) => StatusCode::NOT_FOUND,
            ApiError::CursorAhead { .. } => StatusCode::CONFLICT,
            ApiError::SessionExpired => StatusCode::GONE,
            ApiError::StorageFailure(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<DomainError> for ApiError {
    fn from(e: DomainError) -> Self {
        match e {
            DomainError::EmptyMessage => ApiError::EmptyMessage,
            DomainError::MessageTooLong { len } => ApiError::MessageTooLong(len),
            DomainError::InvalidDisplayName(why) => ApiError::InvalidDisplayName(why),
            DomainError::InvalidStatus { len } => ApiError::InvalidStatus(len),
            DomainError::SelfScope => ApiError::SelfScope,
            DomainError::InvalidHandle(h) => ApiError::UnknownRecipient(h),
            DomainError::InvalidGroupId(g) => ApiError::UnknownGroup(g),
            e @ DomainError::HandleSpaceExhausted(_) => ApiError::StorageFailure(e.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::CursorAhead { cursor, max } => ApiError::CursorAhead { cursor, max },
            StoreError::NotAuthorized => ApiError::NotAuthorized,
            StoreError::UnknownGroup(g) => ApiError::UnknownGroup(g.to_string()),
            StoreError::UnknownHandle(h) => ApiError::UnknownRecipient(h.to_string()),
            StoreError::InvalidLimit(n) => ApiError::InvalidLimit(n),
            StoreError::Domain(d) => d.into(),
            e @ (StoreError::Storage(_) | StoreError::CorruptLog { .. }) => {
                tracing::error!("{e}");
                ApiError::StorageFailure(e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.code().to_owned(), detail: self.to_string() };
        (self.status(), Json(body)).into_response()
    }
}
