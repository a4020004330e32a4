use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::DefaultBodyLimit;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::{parse_group_query, Service, ServiceError};

pub const ERROR_SCHEMA: &str = "qlens-error/1";
pub const HEALTH_SCHEMA: &str = "qlens-health/1";

const MAX_UPLOAD_BYTES: usize = 512 * 1024 * 1024;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::UnknownQuestion(_) | ServiceError::UnknownError(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidQuery(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::MalformedPayload(_) => StatusCode::BAD_REQUEST,
            ServiceError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({
            "schema": ERROR_SCHEMA,
            "error": self.code(),
            "message": self.to_string(),
        });
        (status, axum::Json(body)).into_response()
    }
}

fn json_text(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

type Params = Query<Vec<(String, String)>>;

fn group_query(params: &Params) -> Result<qlens_core::views::GroupQuery, ServiceError> {
    parse_group_query(params.0.iter().map(|(k, v)| (k.as_str(), v.as_str())))
}

/// Runs blocking store work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.expect("service task panicked")
}

async fn health() -> Response {
    axum::Json(json!({ "schema": HEALTH_SCHEMA, "status": "ok" })).into_response()
}

async fn questions(State(svc): State<Arc<Service>>) -> Result<Response, ServiceError> {
    let list = blocking(move || svc.list_questions()).await?;
    Ok(axum::Json(list).into_response())
}

async fn views(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    params: Params,
) -> Result<Response, ServiceError> {
    let query = group_query(&params)?;
    let body = blocking(move || svc.get_views(&id, &query)).await?;
    Ok(json_text(body))
}

async fn recommendation(
    State(svc): State<Arc<Service>>,
    Path((id, rank)): Path<(String, String)>,
    params: Params,
) -> Result<Response, ServiceError> {
    let query = group_query(&params)?;
    let rank: usize = rank
        .parse()
        .map_err(|_| ServiceError::InvalidQuery(format!("rank `{rank}` is not a positive integer")))?;
    let body = blocking(move || svc.get_recommendation(&id, rank, &query)).await?;
    Ok(json_text(body))
}

async fn ingest(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let report = blocking(move || svc.post_ingest(&id, &body)).await?;
    Ok(axum::Json(report).into_response())
}

/// API routes, plus static files from `static_dir` at `/` when given.
pub fn router(service: Arc<Service>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/questions", get(questions))
        .route("/api/questions/{id}/views", get(views))
        .route("/api/questions/{id}/errors/{rank}/recommendation", get(recommendation))
        .route(
            "/api/questions/{id}/ingest",
            post(ingest).layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES)),
        )
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(service: Arc<Service>, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(service, static_dir)).await
}
