//! HTTP endpoints. Request and response bodies are JSON except the label
//! export, which is the classifier's `label<TAB>text` corpus format.
//!
//! | method | path                   | body                                  |
//! |--------|------------------------|---------------------------------------|
//! | POST   | `/classify`            | `{"text"}`                            |
//! | POST   | `/suggest`             | `{"received_text", "typed_text"}`     |
//! | POST   | `/sessions/{id}/events`| `{"idempotency_key"?, "events": [..]}`|
//! | GET    | `/labels/export`       |                                       |
//! | GET    | `/labels/export/meta`  |                                       |
//! | POST   | `/reload`              |                                       |
//! | GET    | `/healthz`             |                                       |

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use emosuggest_core::corpus::TurnId;
use emosuggest_core::session::{LabelRecord, SessionEvent};
use emosuggest_core::{rank_emotions, Emotion, EmotionPrediction, Rgb, SessionError};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tracing::warn;

use crate::labels::{export_corpus, export_meta};
use crate::sessions::SessionStoreError;
use crate::state::AppState;

pub const MAX_BODY_BYTES: usize = 16 * 1024;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotReady,
    Conflict { last_seen: u64, got: u64 },
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(msg) => (StatusCode::BAD_REQUEST, json!({ "error": msg })),
            ApiError::NotReady => (
                StatusCode::SERVICE_UNAVAILABLE,
                json!({ "error": "model and corpus are not loaded yet" }),
            ),
            ApiError::Conflict { last_seen, got } => (
                StatusCode::CONFLICT,
                json!({ "error": "event out of order", "last_seen": last_seen, "got": got }),
            ),
            ApiError::Internal(msg) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": msg })),
        };
        (status, Json(body)).into_response()
    }
}

impl From<SessionStoreError> for ApiError {
    fn from(e: SessionStoreError) -> Self {
        match e {
            SessionStoreError::InvalidId(_) => ApiError::BadRequest(e.to_string()),
            SessionStoreError::Session(SessionError::OutOfOrder { last_seen, got }) => {
                ApiError::Conflict { last_seen, got }
            }
            SessionStoreError::Session(e) => ApiError::BadRequest(e.to_string()),
            SessionStoreError::Io(e) => {
                warn!(error = %e, "session persistence failed");
                ApiError::Internal(e.to_string())
            }
        }
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Err(ApiError::BadRequest("empty body".into()));
    }
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

#[derive(Debug, Deserialize)]
pub struct ClassifyRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub probabilities: EmotionPrediction,
    pub order: Vec<Emotion>,
    pub colors: BTreeMap<Emotion, Rgb>,
}

#[derive(Debug, Deserialize)]
pub struct SuggestRequest {
    pub received_text: String,
    pub typed_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestEntry {
    pub emotion: Emotion,
    pub color: Rgb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_turn_id: Option<TurnId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub probabilities: EmotionPrediction,
    pub entries: Vec<SuggestEntry>,
}

#[derive(Debug, Deserialize)]
pub struct EventsRequest {
    #[serde(default)]
    pub idempotency_key: Option<String>,
    pub events: Vec<SessionEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsResponse {
    pub accepted: usize,
    pub duplicate: bool,
    pub new_labels: usize,
    pub labels: Vec<LabelRecord>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/classify", post(classify))
        .route("/suggest", post(suggest))
        .route("/sessions/{id}/events", post(session_events))
        .route("/labels/export", get(labels_export))
        .route("/labels/export/meta", get(labels_export_meta))
        .route("/reload", post(reload))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let engine = state.engine();
    Json(json!({
        "status": "ok",
        "ready": engine.is_some(),
        "turns": engine.map_or(0, |e| e.turns()),
        "labels": state.labels().len(),
    }))
}

async fn classify(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<ClassifyResponse>, ApiError> {
    let engine = state.engine().ok_or(ApiError::NotReady)?;
    let req: ClassifyRequest = parse_body(&body)?;
    let probabilities = engine.suggester().classify(&req.text);
    let order = rank_emotions(&probabilities).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(Json(ClassifyResponse {
        probabilities,
        order: order.to_vec(),
        colors: state.colors().iter().collect(),
    }))
}

async fn suggest(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<SuggestResponse>, ApiError> {
    let engine = state.engine().ok_or(ApiError::NotReady)?;
    let req: SuggestRequest = parse_body(&body)?;
    let payload = engine.suggester().build_swipe_payload(&req.received_text, &req.typed_text);
    let colors = state.colors();
    let entries = payload
        .entries
        .into_iter()
        .map(|e| SuggestEntry {
            emotion: e.emotion,
            color: colors.color_of(e.emotion),
            score: e.suggestion.as_ref().map(|s| s.score),
            source_turn_id: e.suggestion.as_ref().map(|s| s.source_turn_id),
            text: e.suggestion.map(|s| s.text),
        })
        .collect();
    Ok(Json(SuggestResponse {
        probabilities: payload.prediction,
        entries,
    }))
}

async fn session_events(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<EventsResponse>, ApiError> {
    let req: EventsRequest = parse_body(&body)?;
    let worker = state.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        worker
            .sessions()
            .append(&id, req.idempotency_key.as_deref(), &req.events, worker.timing(), worker.labels())
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(EventsResponse {
        accepted: outcome.accepted,
        duplicate: outcome.duplicate,
        new_labels: outcome.labels.len(),
        labels: outcome.labels,
    }))
}

async fn labels_export(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    let records = state.labels().snapshot();
    (
        [(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")],
        export_corpus(&records),
    )
}

async fn labels_export_meta(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    let records = state.labels().snapshot();
    ([(header::CONTENT_TYPE, "application/x-ndjson")], export_meta(&records))
}

async fn reload(State(state): State<Arc<AppState>>) -> Result<Json<serde_json::Value>, ApiError> {
    let worker = state.clone();
    let turns = tokio::task::spawn_blocking(move || worker.reload())
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(Json(json!({ "reloaded": true, "turns": turns })))
}
