//! HTTP routes and the event stream.

use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use serde_json::json;
use talktrainer_core::analytics::{daily_health_report, metrics_from_records, publish_report, HealthReport};
use talktrainer_core::engine::{Event, Phase};
use talktrainer_core::speakers::{EndpointProbe, LlmConfig};
use talktrainer_core::storage::{TrainingConfig, TranscriptStore};
use tokio::sync::broadcast::error::RecvError;

use crate::bus::ApiEvent;
use crate::runner::RunnerHandle;

/// Upper bound on the speaker liveness check behind `/health`.
pub const PROBE_TIMEOUT: Duration = Duration::from_millis(800);

#[derive(Clone)]
pub struct AppState {
    pub runner: RunnerHandle,
    pub config: Arc<TrainingConfig>,
    pub storage_root: PathBuf,
    pub speaker: Arc<LlmConfig>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/state", get(get_state))
        .route("/conversations/current/utterance", post(post_utterance))
        .route("/events", get(events))
        .route("/admin/trigger-session", post(trigger_session))
        .route("/metrics/sessions", get(session_metrics))
        .route("/reports/daily", get(daily_report))
        .with_state(state)
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn report_for(state: &AppState, date: NaiveDate) -> Result<HealthReport, Response> {
    let root = state.storage_root.clone();
    let config = state.config.clone();
    let speaker = state.speaker.clone();
    tokio::task::spawn_blocking(move || {
        let store = TranscriptStore::open(&root).map_err(|e| e.to_string());
        let probe = EndpointProbe::new(&speaker, PROBE_TIMEOUT);
        match store {
            Ok(store) => daily_health_report(&store, &probe, &config, date),
            // The root itself is unusable; report what can still be checked.
            Err(e) => {
                log::warn!("health: {e}");
                HealthReport {
                    date,
                    storage_writable: false,
                    speaker_reachable: talktrainer_core::speakers::ReachabilityProbe::is_reachable(&probe),
                    config_valid: config.validate().is_ok(),
                    greetings_delivered: 0,
                    user_responses: 0,
                    files_ok: false,
                }
            }
        }
    })
    .await
    .map_err(|e| error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

fn today() -> NaiveDate {
    chrono::Utc::now().date_naive()
}

async fn health(State(state): State<AppState>) -> Response {
    let snapshot = state.runner.snapshot();
    match report_for(&state, today()).await {
        Ok(report) => {
            let status = if report.storage_writable && report.speaker_reachable && report.config_valid {
                "ok"
            } else {
                "degraded"
            };
            Json(json!({
                "status": status,
                "phase": snapshot.state.phase,
                "report": report,
            }))
            .into_response()
        }
        Err(r) => r,
    }
}

async fn get_state(State(state): State<AppState>) -> Response {
    Json(state.runner.snapshot()).into_response()
}

#[derive(Debug, Deserialize)]
struct UtteranceBody {
    text: String,
    #[serde(default)]
    eye_contact: Option<bool>,
}

async fn post_utterance(
    State(state): State<AppState>,
    body: Result<Json<UtteranceBody>, JsonRejection>,
) -> Response {
    let Json(body) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    if body.text.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "text is empty");
    }
    let phase = state.runner.snapshot().state.phase;
    if !phase.accepts_user_input() {
        return error(StatusCode::CONFLICT, format!("not accepting input in phase {phase}"));
    }
    let event = Event::UserUtterance { text: body.text, eye_contact: body.eye_contact, duration_ms: None };
    if !state.runner.post(event) {
        return error(StatusCode::SERVICE_UNAVAILABLE, "engine stopped");
    }
    (StatusCode::ACCEPTED, Json(json!({ "accepted": true }))).into_response()
}

async fn trigger_session(State(state): State<AppState>) -> Response {
    let phase = state.runner.snapshot().state.phase;
    if phase != Phase::Idle {
        return error(StatusCode::CONFLICT, format!("engine busy in phase {phase}"));
    }
    if !state.runner.post(Event::WakeDue) {
        return error(StatusCode::SERVICE_UNAVAILABLE, "engine stopped");
    }
    (StatusCode::ACCEPTED, Json(json!({ "accepted": true }))).into_response()
}

async fn session_metrics(State(state): State<AppState>) -> Response {
    let root = state.storage_root.clone();
    let result = tokio::task::spawn_blocking(move || {
        let store = TranscriptStore::open(&root)?;
        Ok::<_, talktrainer_core::storage::StorageError>(metrics_from_records(&store.read_all()?.records))
    })
    .await;
    match result {
        Ok(Ok(m)) => Json(m).into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    date: Option<NaiveDate>,
}

async fn daily_report(State(state): State<AppState>, Query(q): Query<ReportQuery>) -> Response {
    let report = match report_for(&state, q.date.unwrap_or_else(today)).await {
        Ok(r) => r,
        Err(r) => return r,
    };
    if let Err(e) = publish_report(&report, &state.storage_root, &state.config.notifier) {
        log::warn!("could not write daily report: {e}");
    }
    Json(report).into_response()
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    after: Option<u64>,
}

fn to_sse(e: &ApiEvent) -> SseEvent {
    SseEvent::default()
        .id(e.seq.to_string())
        .event(
            serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
        )
        .json_data(e)
        .expect("api events serialize")
}

/// Server-sent events. `Last-Event-ID` (or `?after=`) replays what was
/// missed; without it the stream starts at the next event.
async fn events(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<EventsQuery>,
) -> Sse<impl Stream<Item = Result<SseEvent, Infallible>>> {
    let after = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok())
        .or(q.after);
    let (backlog, rx) = state.runner.bus.subscribe(after);
    let mut last = backlog.last().map(|e| e.seq).or(after).unwrap_or(0);
    let replay = stream::iter(backlog.iter().map(|e| Ok(to_sse(e))).collect::<Vec<_>>());
    let live = stream::unfold(rx, move |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(e) => return Some((e, rx)),
                Err(RecvError::Lagged(n)) => log::warn!("event stream client lagged by {n}"),
                Err(RecvError::Closed) => return None,
            }
        }
    })
    .filter(move |e| {
        let fresh = e.seq > last;
        if fresh {
            last = e.seq;
        }
        futures::future::ready(fresh)
    })
    .map(|e| Ok(to_sse(&e)));
    Sse::new(replay.chain(live)).keep_alive(KeepAlive::default())
}
