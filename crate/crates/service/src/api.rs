use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::Router;
use serde::Serialize;
use serde_json::Value;

use crate::engine::{
    CreateSessionRequest, Engine, ExitRequest, GenerateRequest, PlaceRequest, RemoveRequest, SearchQuery, SuggestQuery,
};
use crate::error::{ApiError, ApiResult, ErrorCode};

pub type AppState = Arc<Engine>;

/// JSON body extractor whose failures use the service error format.
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct Json<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
pub struct Query<T>(pub T);

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(ErrorCode::BadRequest, r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::new(ErrorCode::BadRequest, r.body_text())
    }
}

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

pub fn router(engine: AppState) -> Router {
    let v1 = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/place", post(place))
        .route("/sessions/{id}/cell", delete(remove))
        .route("/sessions/{id}/exits", post(set_exit))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/suggest", get(suggest))
        .route("/sessions/{id}/export", post(export))
        .route("/search", get(search))
        .route("/generate-element", post(generate_element))
        .route("/corpus/stats", get(corpus_stats));
    Router::new()
        .nest("/v1", v1)
        .fallback(|| async { ApiError::new(ErrorCode::NotFound, "no such endpoint") })
        .with_state(engine)
}

/// Engine calls lock and may rank large pools, so they run off the async
/// workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn create_session(State(engine): State<AppState>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: CreateSessionRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSessionRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::new(ErrorCode::BadRequest, e.to_string()))?
    };
    let view = blocking(move || engine.create_session(&req)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(engine): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || engine.get_session(&id)).await?))
}

async fn place(
    State(engine): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<PlaceRequest>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || engine.place(&id, &req)).await?))
}

async fn remove(
    State(engine): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<RemoveRequest>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || engine.remove(&id, &req)).await?))
}

async fn set_exit(
    State(engine): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ExitRequest>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || engine.set_exit(&id, &req)).await?))
}

async fn undo(State(engine): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || engine.undo(&id)).await?))
}

async fn suggest(
    State(engine): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SuggestQuery>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || engine.suggest(&id, &q)).await?))
}

async fn export(State(engine): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let world = blocking(move || engine.export(&id)).await?;
    let value: Value = serde_json::from_str(&world.export_json()).map_err(ApiError::internal)?;
    Ok(Json(value))
}

async fn search(State(engine): State<AppState>, Query(q): Query<SearchQuery>) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || engine.search(&q)).await?))
}

async fn generate_element(
    State(engine): State<AppState>,
    Json(req): Json<GenerateRequest>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(move || engine.generate_element(&req)).await?))
}

async fn corpus_stats(State(engine): State<AppState>) -> impl IntoResponse {
    Json(engine.corpus_stats())
}
