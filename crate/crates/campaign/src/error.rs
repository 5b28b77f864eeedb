use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use std::fmt;

/// Seconds a client should wait after a planning request ran over budget.
pub const RETRY_AFTER_SECS: u64 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum ApiError {
    NotFound(String),
    Validation(String),
    Conflict(String),
    /// Planning is still running in the background.
    Busy,
    Unauthorized,
    Internal(String),
}

pub type ApiResult<T> = Result<T, ApiError>;

impl ApiError {
    /// Maps a library error: bad input becomes a validation error.
    pub fn validation(e: infplan_core::Error) -> Self {
        if e.is_validation() {
            ApiError::Validation(e.to_string())
        } else {
            ApiError::Internal(e.to_string())
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::NotFound(_) => "not_found",
            ApiError::Validation(_) => "validation",
            ApiError::Conflict(_) => "conflict",
            ApiError::Busy => "busy",
            ApiError::Unauthorized => "unauthorized",
            ApiError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Validation(_) => StatusCode::BAD_REQUEST,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Busy => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Unauthorized => StatusCode::UNAUTHORIZED,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApiError::NotFound(m) | ApiError::Validation(m) | ApiError::Conflict(m) | ApiError::Internal(m) => {
                f.write_str(m)
            }
            ApiError::Busy => f.write_str("planning is still running; retry later"),
            ApiError::Unauthorized => f.write_str("missing or invalid bearer token"),
        }
    }
}

impl std::error::Error for ApiError {}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Internal(format!("storage: {e}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(json!({"error": {"code": self.code(), "message": self.to_string()}}));
        let mut resp = (self.status(), body).into_response();
        if self == ApiError::Busy {
            resp.headers_mut().insert(header::RETRY_AFTER, RETRY_AFTER_SECS.into());
        }
        resp
    }
}
