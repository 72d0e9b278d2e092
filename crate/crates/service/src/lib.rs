//! HTTP backend for suggestion-assisted world editing.
//!
//! Sessions are event-sourced: every edit is an [`session::Event`] appended
//! to a per-session log, and the current grid is the fold of the log. The
//! router in [`api`] exposes the engine under `/v1`.

pub mod api;
pub mod engine;
pub mod error;
pub mod session;
pub mod store;

use std::future::Future;
use std::sync::Arc;

use tokio::net::TcpListener;

pub use api::{router, AppState};
pub use engine::{
    CreateSessionRequest, Engine, ExitRequest, GenerateRequest, GenerateResponse, PlaceKind, PlaceRequest,
    RemoveRequest, ScorerBundle, SearchHit, SearchQuery, ServiceConfig, SessionView, SuggestQuery, Suggestion,
    SuggestionPlan,
};
pub use error::{ApiError, ApiResult, ErrorCode};
pub use session::{Event, SessionState};

/// Serve until `shutdown` resolves, then flush every session log.
pub async fn serve(
    engine: Arc<Engine>,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(engine.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    engine.flush().map_err(std::io::Error::other)
}
