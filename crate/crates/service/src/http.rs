use std::net::SocketAddr;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use crate::error::{Result, ServiceError};
use crate::store::Store;

/// Shared store; the mutex serializes journal appends.
pub type AppState = Arc<Mutex<Store>>;

pub fn shared(store: Store) -> AppState {
    Arc::new(Mutex::new(store))
}

fn lock(state: &AppState) -> MutexGuard<'_, Store> {
    // a panicking handler never leaves a half-applied entry behind
    state.lock().unwrap_or_else(|e| e.into_inner())
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

#[derive(Debug, Deserialize)]
struct SubmitBody {
    annotator: String,
    item_id: String,
    choice: String,
}

async fn next(State(state): State<AppState>, Path(id): Path<String>, Query(q): Query<NextQuery>) -> Result<Response> {
    let annotator = q.annotator.ok_or_else(|| ServiceError::BadRequest("missing `annotator` parameter".into()))?;
    let next = lock(&state).next_task(&id, &annotator)?;
    Ok(Json(next).into_response())
}

async fn submit(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: std::result::Result<Json<SubmitBody>, JsonRejection>,
) -> Result<Response> {
    let Json(body) = body.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let ack = lock(&state).submit(&id, &body.annotator, &body.item_id, &body.choice)?;
    let status = if ack.previous.is_some() { StatusCode::CONFLICT } else { StatusCode::OK };
    Ok((status, Json(ack)).into_response())
}

async fn report(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response> {
    let report = lock(&state).report(&id)?;
    Ok(Json(report).into_response())
}

async fn export(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response> {
    let body = lock(&state).export(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/campaigns/{id}/next", get(next))
        .route("/campaigns/{id}/judgments", post(submit))
        .route("/campaigns/{id}/report", get(report))
        .route("/campaigns/{id}/export", get(export))
        .with_state(state)
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
