use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use flowhub_core::model::UserId;
use flowhub_core::RegistryError;

use crate::error::ApiError;
use crate::AppState;

/// The caller: a user resolved from a bearer token, or anonymous.
#[derive(Debug, Clone, Copy)]
pub struct Actor(pub Option<UserId>);

impl FromRequestParts<AppState> for Actor {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &AppState,
    ) -> Result<Self, Self::Rejection> {
        let Some(value) = parts.headers.get(AUTHORIZATION) else {
            return Ok(Actor(None));
        };
        let token = value
            .to_str()
            .ok()
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .ok_or(RegistryError::InvalidCredentials)?;
        Ok(Actor(Some(state.registry.user_for_token(token)?)))
    }
}
