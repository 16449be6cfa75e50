//! HTTP companion service. Runs live in memory only and are forgotten on
//! restart.
//!
//! Events of a run are streamed as newline-delimited JSON, one event object per
//! line, followed by a single `{"type":"end","state":...}` marker once the run
//! reaches a terminal state.

use std::collections::HashMap;
use std::convert::Infallible;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use blockea_core::block::{parse_xml, validate, Diagnostic, REGISTRY};
use blockea_core::datalog::{export_csv, export_ioh};
use blockea_core::examples::{self, EXAMPLES};
use blockea_core::interp::{CancelToken, Emitted, ExperimentResult, Interpreter, InterpreterConfig, RuntimeError};
use blockea_core::runner::ThreadMode;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::watch;

use crate::commands::DEFAULT_ALGORITHM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Queued,
    Running,
    Finished,
    Failed,
    Cancelled,
}

impl RunState {
    pub fn is_terminal(self) -> bool {
        matches!(self, RunState::Finished | RunState::Failed | RunState::Cancelled)
    }

    /// Only queued -> running -> {finished, failed, cancelled} is allowed.
    pub fn can_advance_to(self, next: RunState) -> bool {
        match self {
            RunState::Queued => next == RunState::Running,
            RunState::Running => next.is_terminal(),
            _ => false,
        }
    }
}

struct RunInner {
    state: RunState,
    events: Vec<Emitted>,
    result: Option<ExperimentResult>,
    error: Option<String>,
}

pub struct RunHandle {
    pub id: String,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub seed: u64,
    pub mode: ThreadMode,
    cancel: CancelToken,
    inner: Mutex<RunInner>,
    /// Bumped after every change to `inner`; streams wait on it.
    version: watch::Sender<u64>,
}

impl RunHandle {
    fn new(id: String, seed: u64, mode: ThreadMode) -> Self {
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64);
        Self {
            id,
            created_at,
            seed,
            mode,
            cancel: CancelToken::new(),
            inner: Mutex::new(RunInner { state: RunState::Queued, events: Vec::new(), result: None, error: None }),
            version: watch::Sender::new(0),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, RunInner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn changed(&self) {
        self.version.send_modify(|v| *v += 1);
    }

    pub fn state(&self) -> RunState {
        self.lock().state
    }

    fn advance(&self, next: RunState, result: Option<ExperimentResult>, error: Option<String>) -> bool {
        let moved = {
            let mut inner = self.lock();
            if !inner.state.can_advance_to(next) {
                false
            } else {
                inner.state = next;
                inner.result = result;
                inner.error = error;
                true
            }
        };
        self.changed();
        moved
    }

    fn push(&self, event: Emitted) {
        self.lock().events.push(event);
        self.changed();
    }

    fn execute(&self, program: blockea_core::block::BlockProgram) {
        self.advance(RunState::Running, None, None);
        let config = InterpreterConfig { mode: self.mode, cancel: self.cancel.clone(), ..InterpreterConfig::default() };
        let sink = |e: Emitted| self.push(e);
        match Interpreter::new(config).run(&program, self.seed, &sink) {
            Ok(result) => self.advance(RunState::Finished, Some(result), None),
            Err(RuntimeError::Cancelled) => self.advance(RunState::Cancelled, None, None),
            Err(e) => self.advance(RunState::Failed, None, Some(e.to_string())),
        };
    }

    fn status(&self) -> serde_json::Value {
        let inner = self.lock();
        json!({
            "id": self.id,
            "state": inner.state,
            "created_at": self.created_at,
            "seed": self.seed,
            "mode": self.mode.to_string(),
            "events": inner.events.len(),
            "error": inner.error,
        })
    }
}

#[derive(Default)]
pub struct AppState {
    runs: RwLock<HashMap<String, Arc<RunHandle>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn get(&self, id: &str) -> Option<Arc<RunHandle>> {
        self.runs.read().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }

    fn insert(&self, seed: u64, mode: ThreadMode) -> Arc<RunHandle> {
        let id = format!("run-{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        let handle = Arc::new(RunHandle::new(id.clone(), seed, mode));
        self.runs.write().unwrap_or_else(|e| e.into_inner()).insert(id, handle.clone());
        handle
    }
}

pub fn router() -> Router {
    router_with(Arc::new(AppState::default()))
}

pub fn router_with(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/programs/validate", post(validate_program))
        .route("/runs", post(submit_run))
        .route("/runs/{id}", get(run_status))
        .route("/runs/{id}/events", get(run_events))
        .route("/runs/{id}/cancel", post(cancel_run))
        .route("/runs/{id}/export", get(export_run))
        .route("/examples", get(list_examples))
        .route("/examples/{name}", get(get_example))
        .route("/blocks", get(list_blocks))
        .with_state(state)
}

pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

fn not_found(id: &str) -> Response {
    error(StatusCode::NOT_FOUND, format!("no run {id:?}"))
}

async fn validate_program(body: String) -> Response {
    match parse_xml(&body) {
        Ok(program) => {
            let diagnostics = validate(&program);
            let valid = !diagnostics.iter().any(Diagnostic::is_error);
            Json(json!({ "valid": valid, "diagnostics": diagnostics })).into_response()
        }
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
    }
}

#[derive(Debug, Deserialize)]
struct RunQuery {
    seed: Option<u64>,
    mode: Option<String>,
}

async fn submit_run(State(app): State<Arc<AppState>>, Query(q): Query<RunQuery>, body: String) -> Response {
    let mode = match q.mode.as_deref().map(ThreadMode::from_str).transpose() {
        Ok(mode) => mode.unwrap_or(ThreadMode::Sequential),
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let program = match parse_xml(&body) {
        Ok(p) => p,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let diagnostics = validate(&program);
    if diagnostics.iter().any(Diagnostic::is_error) {
        return (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "error": "program has validation errors", "diagnostics": diagnostics })))
            .into_response();
    }
    let handle = app.insert(q.seed.unwrap_or(0), mode);
    let worker = handle.clone();
    let spawned = std::thread::Builder::new()
        .name(format!("blockea-{}", handle.id))
        .spawn(move || worker.execute(program));
    if let Err(e) = spawned {
        handle.advance(RunState::Running, None, None);
        handle.advance(RunState::Failed, None, Some(format!("could not start the run: {e}")));
        return error(StatusCode::INTERNAL_SERVER_ERROR, format!("could not start the run: {e}"));
    }
    Json(json!({ "id": handle.id, "state": handle.state() })).into_response()
}

async fn run_status(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match app.get(&id) {
        Some(h) => Json(h.status()).into_response(),
        None => not_found(&id),
    }
}

async fn run_events(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(handle) = app.get(&id) else {
        return not_found(&id);
    };
    let rx = handle.version.subscribe();
    let stream = futures::stream::unfold(Some((handle, rx, 0usize)), |cursor| async move {
        let (handle, mut rx, next) = cursor?;
        loop {
            // Mark the current version seen before reading, so a change made
            // after the read always wakes `changed` below.
            rx.borrow_and_update();
            let (chunk, end) = {
                let inner = handle.lock();
                let mut chunk = String::new();
                for e in &inner.events[next..] {
                    chunk.push_str(&serde_json::to_string(e).expect("events serialize"));
                    chunk.push('\n');
                }
                let end = inner.state.is_terminal().then(|| {
                    let mut marker = json!({ "type": "end", "state": inner.state });
                    if let Some(err) = &inner.error {
                        marker["error"] = json!(err);
                    }
                    marker.to_string() + "\n"
                });
                (chunk, (inner.events.len(), end))
            };
            let (len, end) = end;
            if !chunk.is_empty() {
                return Some((Ok::<_, Infallible>(Bytes::from(chunk)), Some((handle, rx, len))));
            }
            if let Some(marker) = end {
                return Some((Ok(Bytes::from(marker)), None));
            }
            if rx.changed().await.is_err() {
                return None;
            }
        }
    });
    ([(header::CONTENT_TYPE, "application/x-ndjson")], Body::from_stream(stream)).into_response()
}

async fn cancel_run(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(handle) = app.get(&id) else {
        return not_found(&id);
    };
    let state = handle.state();
    if state.is_terminal() {
        return (StatusCode::CONFLICT, Json(json!({ "id": id, "state": state, "error": "run already ended" }))).into_response();
    }
    handle.cancel.cancel();
    (StatusCode::ACCEPTED, Json(json!({ "id": id, "state": state }))).into_response()
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
    function_name: Option<String>,
    dimension: Option<usize>,
    algorithm: Option<String>,
}

async fn export_run(State(app): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<ExportQuery>) -> Response {
    let Some(handle) = app.get(&id) else {
        return not_found(&id);
    };
    let inner = handle.lock();
    let Some(result) = &inner.result else {
        return (StatusCode::CONFLICT, Json(json!({ "error": "run has not finished", "state": inner.state }))).into_response();
    };
    match q.format.as_deref().unwrap_or("csv") {
        "csv" => ([(header::CONTENT_TYPE, "text/csv")], export_csv(&result.logs)).into_response(),
        "ioh" => {
            let meta = crate::commands::ioh_meta(
                &result.logs,
                std::path::Path::new(&handle.id),
                q.function_name.as_deref(),
                q.dimension,
                q.algorithm.as_deref().unwrap_or(DEFAULT_ALGORITHM),
            );
            match export_ioh(&result.logs, &meta) {
                Ok(ioh) => Json(json!({
                    "info_path": ioh.info_path,
                    "info": ioh.info,
                    "dat_path": ioh.dat_path,
                    "dat": ioh.dat,
                }))
                .into_response(),
                Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
            }
        }
        other => error(StatusCode::BAD_REQUEST, format!("unknown export format {other:?} (expected csv or ioh)")),
    }
}

async fn list_examples() -> Json<serde_json::Value> {
    Json(json!(EXAMPLES
        .iter()
        .map(|e| json!({ "name": e.name, "slug": e.slug, "description": e.description }))
        .collect::<Vec<_>>()))
}

async fn get_example(Path(name): Path<String>) -> Response {
    match examples::find(&name) {
        Some(e) => ([(header::CONTENT_TYPE, "application/xml")], e.xml).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no example named {name:?}")),
    }
}

async fn list_blocks() -> Json<serde_json::Value> {
    Json(json!(REGISTRY))
}
