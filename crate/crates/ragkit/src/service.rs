//! Read-only HTTP service exposing hierarchical and dimension-routed
//! retrieval over an immutable loaded engine.
//!
//! Endpoints: `POST /v1/query` runs a retrieval request, `GET /v1/healthz`
//! reports index statistics, and `GET /v1/chunks/{id}` returns one chunk
//! with provenance. The engine loads in the background; every endpoint
//! answers 503 until loading finishes. Responses are pure functions of the
//! loaded index and the request, apart from the reported timing.

use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::json;

use crate::config::EngineConfig;
use crate::engine::{QueryEngine, QueryOutcome, QueryRequest};
use crate::error::{Error, Result};

/// Shared slot that receives the engine once background loading finishes.
pub type SharedEngine = Arc<RwLock<Option<Arc<QueryEngine>>>>;

/// Creates an empty engine slot (service answers 503 while it stays empty).
pub fn empty_state() -> SharedEngine {
    Arc::new(RwLock::new(None))
}

/// Installs a loaded engine, flipping the service to ready.
pub fn install_engine(state: &SharedEngine, engine: QueryEngine) {
    *state.write().expect("engine slot poisoned") = Some(Arc::new(engine));
}

fn current_engine(state: &SharedEngine) -> Option<Arc<QueryEngine>> {
    state.read().expect("engine slot poisoned").clone()
}

/// Query response: the deterministic outcome plus server-side timing.
#[derive(Debug, Serialize)]
pub struct QueryResponse {
    /// The deterministic retrieval outcome.
    #[serde(flatten)]
    pub outcome: QueryOutcome,
    /// Server-side handling time in milliseconds.
    pub timing_ms: f64,
}

fn status_for(err: &Error) -> StatusCode {
    match err {
        Error::EmptyDimension(_) => StatusCode::NOT_FOUND,
        Error::InvalidInput(_)
        | Error::Json(_)
        | Error::UnknownSubset(_)
        | Error::EmptyText(_)
        | Error::ZeroWords => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn error_response(status: StatusCode, code: &str, message: &str) -> Response {
    (status, Json(json!({ "error": { "code": code, "message": message } }))).into_response()
}

fn not_ready() -> Response {
    (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "status": "loading" }))).into_response()
}

async fn handle_query(
    State(state): State<SharedEngine>,
    payload: std::result::Result<Json<QueryRequest>, JsonRejection>,
) -> Response {
    let Some(engine) = current_engine(&state) else {
        return not_ready();
    };
    let request = match payload {
        Ok(Json(request)) => request,
        Err(rejection) => {
            return error_response(
                StatusCode::BAD_REQUEST,
                "malformed_request",
                &rejection.body_text(),
            );
        }
    };
    let started = Instant::now();
    let joined = tokio::task::spawn_blocking(move || engine.query(&request)).await;
    match joined {
        Err(join_error) => error_response(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            &join_error.to_string(),
        ),
        Ok(Err(err)) => error_response(status_for(&err), err.code(), &err.to_string()),
        Ok(Ok(outcome)) => {
            let timing_ms = started.elapsed().as_secs_f64() * 1_000.0;
            (StatusCode::OK, Json(QueryResponse { outcome, timing_ms })).into_response()
        }
    }
}

async fn handle_healthz(State(state): State<SharedEngine>) -> Response {
    match current_engine(&state) {
        None => not_ready(),
        Some(engine) => {
            (StatusCode::OK, Json(json!({ "status": "ok", "stats": engine.stats() })))
                .into_response()
        }
    }
}

async fn handle_chunk(
    State(state): State<SharedEngine>,
    UrlPath(chunk_id): UrlPath<String>,
) -> Response {
    let Some(engine) = current_engine(&state) else {
        return not_ready();
    };
    let Some(chunk) = engine.chunk(&chunk_id) else {
        return error_response(
            StatusCode::NOT_FOUND,
            "not_found",
            &format!("unknown chunk: {chunk_id}"),
        );
    };
    let document = engine.document(&chunk.doc_id);
    let body = json!({
        "chunk": chunk,
        "document": document.map(|d| json!({
            "doc_id": d.doc_id,
            "title": d.title,
            "source": d.source,
            "license_note": d.license_note,
        })),
    });
    (StatusCode::OK, Json(body)).into_response()
}

/// Builds the service router over a shared engine slot.
pub fn router(state: SharedEngine) -> Router {
    Router::new()
        .route("/v1/query", post(handle_query))
        .route("/v1/healthz", get(handle_healthz))
        .route("/v1/chunks/*chunk_id", get(handle_chunk))
        .with_state(state)
}

/// Binds the configured address and serves until the process exits.
///
/// Engine loading runs on a background thread so the service is reachable
/// (answering 503) immediately.
pub async fn serve(cfg: EngineConfig) -> Result<()> {
    let state = empty_state();
    let loader_state = state.clone();
    let loader_cfg = cfg.clone();
    std::thread::spawn(move || match QueryEngine::load(&loader_cfg) {
        Ok(engine) => install_engine(&loader_state, engine),
        Err(err) => eprintln!(
            "{}",
            json!({ "event": "engine_load_failed", "code": err.code(), "message": err.to_string() })
        ),
    });

    let listener = tokio::net::TcpListener::bind(&cfg.service.bind)
        .await
        .map_err(|e| Error::InvalidInput(format!("failed to bind {}: {e}", cfg.service.bind)))?;
    eprintln!(
        "{}",
        json!({ "event": "listening", "bind": listener.local_addr().map(|a| a.to_string()).unwrap_or_default() })
    );
    axum::serve(listener, router(state))
        .await
        .map_err(|e| Error::Remote(format!("service terminated: {e}")))
}
