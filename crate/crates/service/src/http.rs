//! HTTP surface over the app.

use crate::{App, ServiceError};
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use skein_core::{ToolId, TraceLog, Turn};
use skein_tools::refine::refine_documentation;
use skein_tools::{DiscoverFilter, RefineOptions, ToolManifest};
use std::sync::Arc;

#[derive(Debug, Deserialize)]
pub struct SearchRequest {
    pub query: String,
    /// Prior turns as [question, answer] pairs.
    #[serde(default)]
    pub context: Vec<(String, String)>,
}

#[derive(Debug, Deserialize)]
pub struct RefineRequest {
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
}

enum ApiError {
    BadRequest(String),
    Internal { error: String, trace_id: String },
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::BadRequest(message) => (
                StatusCode::BAD_REQUEST,
                Json(json!({ "error": message })),
            )
                .into_response(),
            ApiError::Internal { error, trace_id } => (
                StatusCode::INTERNAL_SERVER_ERROR,
                Json(json!({ "error": error, "trace_id": trace_id })),
            )
                .into_response(),
        }
    }
}

pub fn router(app: Arc<App>) -> Router {
    Router::new()
        .route("/v1/search", post(search))
        .route("/v1/trace/{id}", get(trace_events))
        .route("/v1/tools", post(register_tool).get(list_tools))
        .route("/v1/tools/{id}/refine", post(refine_tool))
        .route("/v1/cache/stats", get(cache_stats))
        .route("/v1/admin/scenes/reload", post(reload_scenes))
        .with_state(app)
}

async fn search(
    State(app): State<Arc<App>>,
    headers: HeaderMap,
    Json(request): Json<SearchRequest>,
) -> Result<Json<serde_json::Value>, ApiError> {
    // Per-request seed header; recorded so seeded admin operations run
    // reproducibly under the same id.
    let seed = headers
        .get("x-seed")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok())
        .unwrap_or(app.config.default_seed);

    let context: Vec<Turn> = request
        .context
        .into_iter()
        .map(|(query, answer)| Turn { query, answer })
        .collect();
    let outcome = tokio::task::spawn_blocking(move || app.search(&request.query, context))
        .await
        .map_err(|e| ApiError::Internal {
            error: e.to_string(),
            trace_id: String::new(),
        })?;
    match outcome {
        Ok(outcome) => Ok(Json(json!({
            "answer": outcome.answer,
            "answer_text": outcome.answer_text,
            "config_used": outcome.config_used,
            "trace_id": outcome.trace_id,
            "cached": outcome.cached,
            "seed": seed,
        }))),
        Err(ServiceError::EmptyQuery) => {
            Err(ApiError::BadRequest("query text must be non-empty".into()))
        }
        Err(e) => Err(ApiError::Internal {
            error: e.to_string(),
            trace_id: String::new(),
        }),
    }
}

async fn trace_events(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
) -> Result<String, ApiError> {
    let events = app.trace.events_for(&id);
    if events.is_empty() {
        return Err(ApiError::BadRequest(format!("unknown trace id {id:?}")));
    }
    Ok(TraceLog::to_jsonl(&events))
}

async fn register_tool(
    State(app): State<Arc<App>>,
    Json(manifest): Json<ToolManifest>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let id = app
        .registry
        .register(manifest)
        .map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok(Json(json!({ "tool_id": id })))
}

async fn list_tools(State(app): State<Arc<App>>) -> Json<Vec<ToolManifest>> {
    Json(app.registry.discover(&DiscoverFilter::default()))
}

async fn refine_tool(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Json(request): Json<RefineRequest>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let defaults = RefineOptions::default();
    let options = RefineOptions {
        max_iters: request.max_iters.unwrap_or(defaults.max_iters),
        phi: request.phi.unwrap_or(defaults.phi),
        tau: request.tau.unwrap_or(defaults.tau),
    };
    let outcome = tokio::task::spawn_blocking(move || {
        refine_documentation(&app.registry, &ToolId::new(id), options, &app.gateway)
    })
    .await
    .map_err(|e| ApiError::Internal {
        error: e.to_string(),
        trace_id: String::new(),
    })?
    .map_err(|e| ApiError::BadRequest(e.to_string()))?;

    Ok(Json(json!({
        "revision": outcome.doc.revision,
        "iterations": outcome.iterations_run,
        "converged": outcome.converged,
        "deltas": outcome.deltas,
        "documentation": outcome.doc.current,
    })))
}

async fn cache_stats(State(app): State<Arc<App>>) -> Json<serde_json::Value> {
    let stats = app.cache.stats();
    Json(json!({
        "lookups": stats.lookups,
        "hits": stats.hits,
        "hit_rate": stats.hit_rate(),
        "entries": app.cache.len(),
    }))
}

async fn reload_scenes(State(app): State<Arc<App>>) -> Result<Json<serde_json::Value>, ApiError> {
    app.reload_scenes().map_err(|e| ApiError::Internal {
        error: e.to_string(),
        trace_id: String::new(),
    })?;
    Ok(Json(json!({ "reloaded": true })))
}

/// Serves until `shutdown` resolves, draining in-flight requests.
pub async fn serve(
    app: Arc<App>,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(app))
        .with_graceful_shutdown(shutdown)
        .await
}
