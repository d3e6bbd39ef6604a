//! JSON-over-HTTP front end for the orchestrator.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tracing::info;

use super::{Orchestrator, ServiceError, SessionView, StratumKey, TurnResult};
use crate::config::DEFAULT_SCENARIO_ID;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub stratum: StratumKey,
    #[serde(default = "default_scenario")]
    pub scenario_id: String,
}

fn default_scenario() -> String {
    DEFAULT_SCENARIO_ID.to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SendMessageRequest {
    pub text: String,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) | ServiceError::UnknownScenario(_) => StatusCode::NOT_FOUND,
            ServiceError::NotActive { .. } | ServiceError::TurnInFlight(_) => StatusCode::CONFLICT,
            ServiceError::Contract(_) => StatusCode::BAD_REQUEST,
            ServiceError::Classification(crate::stress::StressError::Contract(_)) => StatusCode::BAD_REQUEST,
            ServiceError::Classification(_) | ServiceError::Agent(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Persistence(_) | ServiceError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) | ServiceError::UnknownScenario(_) => "not_found",
            ServiceError::NotActive { .. } | ServiceError::TurnInFlight(_) => "conflict",
            ServiceError::Contract(_) => "invalid_request",
            ServiceError::Classification(crate::stress::StressError::Contract(_)) => "invalid_request",
            ServiceError::Classification(_) | ServiceError::Agent(_) => "provider_failure",
            ServiceError::Persistence(_) | ServiceError::Config(_) => "internal",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.kind(), "message": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}

type AppState = Arc<Orchestrator>;

pub fn router(orchestrator: Arc<Orchestrator>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(send_message))
        .route("/sessions/{id}/export", get(export_session))
        .route("/sessions/{id}/end", post(end_session))
        .with_state(orchestrator)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_session(
    State(o): State<AppState>,
    Json(req): Json<CreateSessionRequest>,
) -> Result<(StatusCode, Json<SessionView>), ServiceError> {
    let s = o.create_session(req.stratum, &req.scenario_id).await?;
    Ok((StatusCode::CREATED, Json(s.view())))
}

async fn get_session(State(o): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(o.session_view(&id).await?))
}

async fn send_message(
    State(o): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<SendMessageRequest>,
) -> Result<Json<TurnResult>, ServiceError> {
    Ok(Json(o.process_turn(&id, &req.text).await?))
}

async fn export_session(State(o): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let body = o.export_session(&id).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn end_session(State(o): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ServiceError> {
    Ok(Json(o.end_session(&id).await?))
}

/// Serves the API on `addr` until the listener fails, sweeping idle
/// sessions every `sweep_every`.
pub async fn serve(orchestrator: Arc<Orchestrator>, addr: SocketAddr, sweep_every: Duration) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!(addr = %listener.local_addr()?, "listening");
    let sweeper = {
        let o = orchestrator.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(sweep_every);
            loop {
                tick.tick().await;
                let expired = o.expire_idle().await;
                if !expired.is_empty() {
                    info!(count = expired.len(), "abandoned idle sessions");
                }
            }
        })
    };
    let result = axum::serve(listener, router(orchestrator)).await;
    sweeper.abort();
    result
}
