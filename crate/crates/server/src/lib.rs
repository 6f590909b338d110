//! HTTP surface of FlowHub.
//!
//! Three route families share one [`Registry`]: the native JSON API under
//! `/workflows`, `/search`, `/teams` and friends; a read-only GA4GH TRS v2
//! API under `/ga4gh/trs/v2`; and HTML landing pages with FAIR Signposting
//! `Link` headers, served from `/workflows/{id}` to clients asking for HTML.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::http::StatusCode;
use axum::Router;
use flowhub_core::Registry;

pub mod auth;
pub mod error;
mod routes;
mod util;

pub use auth::Actor;
pub use error::{ApiError, ApiResult};
pub use routes::landing::signposting_links;

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
}

pub fn router(registry: Arc<Registry>) -> Router {
    let state = AppState { registry };
    Router::new()
        .merge(routes::workflows::routes())
        .merge(routes::directory::routes())
        .nest("/ga4gh/trs/v2", routes::trs::routes())
        .fallback(|| async { ApiError::not_found("no such route") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(
                StatusCode::METHOD_NOT_ALLOWED,
                "method_not_allowed",
                "method not allowed on this route",
            )
        })
        .with_state(state)
}

/// Serves the API until the process is stopped.
pub async fn serve(registry: Arc<Registry>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(registry)).await
}
