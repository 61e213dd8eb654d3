use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use crosstrace_core::abstraction::{Action, Policy};
use crosstrace_core::dataview::{data_panel, keyframes};
use crosstrace_core::trace::{trace_to_json, SnapshotMode};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::error::ApiError;
use crate::registry::Registry;
use crate::sessions::Sessions;

/// Trace paths older than this many visible steps are not reported.
pub const DEFAULT_PATH_AGE: usize = 8;

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub sessions: Arc<Sessions>,
}

impl AppState {
    pub fn new(registry: Registry) -> Self {
        AppState { registry: Arc::new(registry), sessions: Arc::new(Sessions::default()) }
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn body<T: DeserializeOwned>(bytes: &Bytes, kind: &str) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(kind, e.to_string()))
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/programs", post(create_program))
        .route("/programs/:id", get(get_program))
        .route("/programs/:id/trace", get(get_trace))
        .route("/sessions", post(create_session))
        .route("/sessions/:id/view", get(get_view))
        .route("/sessions/:id/data", get(get_data))
        .route("/sessions/:id/log", get(get_log))
        .route("/sessions/:id/actions", post(post_action))
        .route("/sessions/:id/keyframes", get(get_keyframes))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the process is interrupted, evicting idle sessions once a minute.
pub async fn serve(addr: SocketAddr, state: AppState, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let sessions = state.sessions.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sessions.evict_idle();
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Deserialize)]
struct NewProgram {
    source: String,
    #[serde(default)]
    seed: u64,
}

async fn create_program(State(st): State<AppState>, bytes: Bytes) -> ApiResult {
    let req: NewProgram = body(&bytes, "InvalidRequest")?;
    let registry = st.registry.clone();
    let record = tokio::task::spawn_blocking(move || registry.create(&req.source, req.seed))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(record.summary()))
}

async fn get_program(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let r = st.registry.get(&id)?;
    let mut v = r.summary();
    v["source"] = json!(r.source);
    Ok(Json(v))
}

#[derive(Deserialize)]
struct TraceQuery {
    snapshots: Option<String>,
}

async fn get_trace(State(st): State<AppState>, Path(id): Path<String>, Query(q): Query<TraceQuery>) -> ApiResult {
    let r = st.registry.get(&id)?;
    let mode = match q.snapshots.as_deref() {
        None | Some("none") => SnapshotMode::None,
        Some("full") => SnapshotMode::Full,
        Some(other) => return Err(ApiError::bad_request("InvalidRequest", format!("unknown snapshots mode {other}"))),
    };
    Ok(Json(trace_to_json(&r.trace, mode)))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NewSession {
    program_id: String,
    #[serde(default = "yes")]
    disclosure: bool,
}

fn yes() -> bool {
    true
}

async fn create_session(State(st): State<AppState>, bytes: Bytes) -> ApiResult {
    let req: NewSession = body(&bytes, "InvalidRequest")?;
    let program = st.registry.get(&req.program_id)?;
    let s = st.sessions.create(program, Policy { disclosure: req.disclosure });
    let s = s.lock().expect("session");
    Ok(Json(json!({ "sessionId": s.session_id, "programId": s.program.program_id, "view": s.view.to_json() })))
}

async fn get_view(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    st.sessions.with(&id, |s| Json(s.view.to_json()))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct DataQuery {
    max_age: Option<usize>,
}

async fn get_data(State(st): State<AppState>, Path(id): Path<String>, Query(q): Query<DataQuery>) -> ApiResult {
    st.sessions.with(&id, |s| Json(json!(data_panel(&s.view, q.max_age.unwrap_or(DEFAULT_PATH_AGE)))))
}

async fn get_log(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    st.sessions.with(&id, |s| Json(json!({ "actions": s.view.log() })))
}

async fn post_action(State(st): State<AppState>, Path(id): Path<String>, bytes: Bytes) -> ApiResult {
    let action: Action = body(&bytes, "InvalidAction")?;
    st.sessions.with(&id, |s| {
        let targets = s.view.apply(&action)?;
        let mut v = s.view.to_json();
        if matches!(action, Action::SelectSource { .. }) {
            v["selected"] = json!(targets);
        }
        Ok(Json(v))
    })?
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct KeyframeQuery {
    from_tick: f64,
    to_tick: f64,
}

async fn get_keyframes(State(st): State<AppState>, Path(id): Path<String>, Query(q): Query<KeyframeQuery>) -> ApiResult {
    st.sessions.with(&id, |s| {
        let total = s.view.trace().total_ops() as f64;
        for t in [q.from_tick, q.to_tick] {
            if !(0.0..=total).contains(&t) {
                return Err(ApiError::bad_request("OutOfRange", format!("position {t} is outside 0..={total}")));
            }
        }
        Ok(Json(json!({ "keyframes": keyframes(&s.view, q.from_tick, q.to_tick) })))
    })?
}
