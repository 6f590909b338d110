use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use flowhub_core::git::GitError;
use flowhub_core::rocrate::CrateError;
use flowhub_core::RegistryError;
use serde_json::{json, Value};

/// An error response. Every body carries a stable `code` and a readable
/// `message`; validation failures add the report under `details`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

pub(crate) fn status_of(e: &RegistryError) -> StatusCode {
    use RegistryError::*;
    match e {
        NotFound { .. } => StatusCode::NOT_FOUND,
        AuthenticationRequired | InvalidCredentials => StatusCode::UNAUTHORIZED,
        AccessDenied { .. } | Forbidden(_) => StatusCode::FORBIDDEN,
        Validation(_) | AttributionCycle { .. } | Parse(_) => StatusCode::UNPROCESSABLE_ENTITY,
        FrozenVersion { .. } | VisibilityRequired | DuplicateItem | Conflict(_) => {
            StatusCode::CONFLICT
        }
        MintFailed(_) => StatusCode::BAD_GATEWAY,
        BadQuery(_) | InvalidInput(_) | Class(_) => StatusCode::BAD_REQUEST,
        Crate(CrateError::SizeLimit { .. }) => StatusCode::PAYLOAD_TOO_LARGE,
        Crate(CrateError::MissingMainFile(_)) => StatusCode::INTERNAL_SERVER_ERROR,
        Crate(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Git(GitError::RefNotFound(_)) => StatusCode::NOT_FOUND,
        Git(GitError::SizeLimit(_)) => StatusCode::PAYLOAD_TOO_LARGE,
        Git(GitError::FetchError { .. }) => StatusCode::BAD_GATEWAY,
        Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        let details = match &e {
            RegistryError::Validation(report) => serde_json::to_value(report).ok(),
            _ => None,
        };
        ApiError {
            status: status_of(&e),
            code: e.code(),
            message: e.to_string(),
            details,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, "{}", self.message);
        }
        let mut body = json!({"code": self.code, "message": self.message});
        if let Some(d) = self.details {
            body["details"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
