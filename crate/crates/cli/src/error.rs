use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use crosstrace_core::trace::Tick;
use crosstrace_core::{ParseError, RuntimeError, SourceSpan, ViewError};
use serde_json::{json, Map, Value};

/// Error payload shared by the HTTP service and the JSON output of the CLI:
/// `{"error": {"kind", "message", "span"?, "tick"?}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: String,
    pub message: String,
    pub span: Option<SourceSpan>,
    pub tick: Option<Tick>,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError { status, kind: kind.into(), message: message.into(), span: None, tick: None }
    }

    pub fn bad_request(kind: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, kind, message)
    }

    pub fn not_found(kind: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, kind, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }

    pub fn to_json(&self) -> Value {
        let mut e = Map::new();
        e.insert("kind".into(), json!(self.kind));
        e.insert("message".into(), json!(self.message));
        if let Some(span) = self.span {
            e.insert("span".into(), json!(span));
        }
        if let Some(tick) = self.tick {
            e.insert("tick".into(), json!(tick));
        }
        json!({ "error": e })
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        ApiError { span: Some(e.span), ..Self::bad_request("ParseError", e.to_string()) }
    }
}

impl From<RuntimeError> for ApiError {
    fn from(e: RuntimeError) -> Self {
        ApiError {
            span: Some(e.span),
            tick: Some(e.tick),
            ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "RuntimeError", e.to_string())
        }
    }
}

impl From<ViewError> for ApiError {
    fn from(e: ViewError) -> Self {
        let status = match e {
            ViewError::UnknownStep(_) | ViewError::UnknownGroup(_) => StatusCode::NOT_FOUND,
            ViewError::OutOfRange { .. } | ViewError::BadFraction(_) | ViewError::InvalidSpan { .. } => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::CONFLICT,
        };
        Self::new(status, e.kind(), e.to_string())
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.to_json())).into_response()
    }
}
