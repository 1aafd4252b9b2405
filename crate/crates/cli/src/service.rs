//! Read-only JSON service over a loaded [`Atlas`].
//!
//! Every handler reads the shared, immutable atlas; nothing is written, so
//! requests run concurrently without locks.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use atlas_core::atlas::{AtlasError, MapType, OverlayMode};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::artifacts::Atlas;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { error: error.into(), position: None } }
    }

    fn bad_request(e: &AtlasError) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, body: ErrorBody { error: e.to_string(), position: e.position() } }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Shared = State<Arc<Atlas>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub expr: String,
}

pub fn router(atlas: Arc<Atlas>) -> Router {
    Router::new()
        .route("/stats", get(stats))
        .route("/map/{kind}", get(map))
        .route("/overlay/element/{symbol}", get(overlay))
        .route("/query", post(query))
        .route("/doc/{*doc_id}", get(document))
        .route("/topics", get(topics))
        .route("/labels", get(labels))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "no such endpoint") })
        .with_state(atlas)
}

async fn stats(State(a): Shared) -> impl IntoResponse {
    Json(a.stats())
}

async fn topics(State(a): Shared) -> impl IntoResponse {
    Json(a.topics())
}

async fn labels(State(a): Shared) -> impl IntoResponse {
    Json(a.labels())
}

fn map_type(s: &str) -> Result<MapType, ApiError> {
    s.parse().map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("unknown map {s:?}; expected lda or ccp")))
}

async fn map(State(a): Shared, Path(kind): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(a.map(map_type(&kind)?)).into_response())
}

async fn overlay(State(a): Shared, Path(symbol): Path<String>, Query(params): Query<HashMap<String, String>>) -> Result<Response, ApiError> {
    let kind = match params.get("map") {
        Some(m) => m.parse::<MapType>().map_err(|e| ApiError::bad_request(&e))?,
        None => MapType::Lda,
    };
    let mode = match params.get("mode") {
        Some(m) => m.parse::<OverlayMode>().map_err(|e| ApiError::bad_request(&e))?,
        None => OverlayMode::default(),
    };
    let mut elements = vec![symbol.clone()];
    for s in params.get("elements").map(|s| s.split(',')).into_iter().flatten().map(str::trim).filter(|s| !s.is_empty()) {
        if !elements.iter().any(|e| e == s) {
            elements.push(s.to_string());
        }
    }
    match a.overlay(kind, &elements, mode) {
        Ok(o) => Ok(Json(o).into_response()),
        Err(AtlasError::UnknownElement(s)) if s == symbol => Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown element {s:?}"))),
        Err(e) => Err(ApiError::bad_request(&e)),
    }
}

async fn query(State(a): Shared, body: Bytes) -> Result<Response, ApiError> {
    let req: QueryRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("body must be {{\"expr\": string}}: {e}")))?;
    a.query(&req.expr).map(|r| Json(r).into_response()).map_err(|e| ApiError::bad_request(&e))
}

async fn document(State(a): Shared, Path(doc_id): Path<String>) -> Result<Response, ApiError> {
    a.document(&doc_id)
        .map(|d| Json(d).into_response())
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no document {doc_id:?}")))
}

/// Serves until the process is stopped.
pub async fn serve(atlas: Arc<Atlas>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(atlas)).await
}
