//! Click-and-traverse server.
//!
//! | route | |
//! |---|---|
//! | `POST /session` | `{"manifest": {..}}` or `{"generate": {"seed", "difficulty"}}` → `{proto, id, state}` |
//! | `POST /session/{id}/goal` | `{x, y}` → ack event, or 422 with an error event |
//! | `POST /session/{id}/teleport` | debug: `{x, y}` moves the agent root |
//! | `GET /session/{id}/scene` | manifest and full-resolution blocked mask |
//! | `GET /session/{id}/stream` | WebSocket: state frames at 10 Hz, ack and error events; accepts goal commands |
//! | `DELETE /session/{id}` | stop the session |

mod actor;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use fieldnav_core::config::RunConfig;
use fieldnav_core::scene::walkable::project_walkable;
use fieldnav_core::scene::{generate_scene, SceneError, SceneManifest};
use fieldnav_core::session::{parse_goal_command, AckEvent, ErrorEvent, Event, MapSlice, SessionCore, SessionError, PROTO, TICK_SECONDS};
use futures_util::{SinkExt, StreamExt};
use serde::Deserialize;
use tokio::sync::{broadcast, oneshot};

pub use actor::SessionHandle;
use actor::{scene_body, spawn_session, Request};

/// How a session's scene is chosen.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum CreateSession {
    Manifest(SceneManifest),
    Generate { seed: u64, difficulty: f64 },
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: RunConfig,
    period: Duration,
    sessions: Mutex<HashMap<u64, Arc<SessionHandle>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: RunConfig) -> Self {
        Self::with_period(config, Duration::from_secs_f64(TICK_SECONDS))
    }

    /// Tick period other than the standard 100 ms.
    pub fn with_period(config: RunConfig, period: Duration) -> Self {
        Self {
            inner: Arc::new(Inner { config, period, sessions: Mutex::new(HashMap::new()), next_id: AtomicU64::new(1) }),
        }
    }

    fn session(&self, id: u64) -> Result<Arc<SessionHandle>, Response> {
        self.inner
            .sessions
            .lock()
            .expect("session table poisoned")
            .get(&id)
            .cloned()
            .ok_or_else(|| error(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}", axum::routing::delete(delete_session))
        .route("/session/{id}/goal", post(set_goal))
        .route("/session/{id}/teleport", post(teleport))
        .route("/session/{id}/scene", get(scene))
        .route("/session/{id}/stream", get(stream))
        .with_state(state)
}

/// Serve until ctrl-c.
pub async fn serve(addr: SocketAddr, config: RunConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, message: String) -> Response {
    json(status, Event::Error(ErrorEvent { proto: PROTO, tick: 0, message }).to_json())
}

fn rejection(e: SessionError) -> Response {
    let status = match e {
        SessionError::BadCommand(_) => StatusCode::BAD_REQUEST,
        SessionError::Scene(SceneError::Json(_)) => StatusCode::BAD_REQUEST,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    };
    error(status, e.to_string())
}

fn gone() -> Response {
    error(StatusCode::GONE, "session stopped".into())
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Response {
    let req: CreateSession = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("bad session request: {e}")),
    };
    let config = app.inner.config.clone();
    let built = tokio::task::spawn_blocking(move || -> Result<(SessionCore, MapSlice), SessionError> {
        let manifest = match req {
            CreateSession::Manifest(m) => m,
            CreateSession::Generate { seed, difficulty } => generate_scene(seed, difficulty, &config.scene)?.manifest,
        };
        let band = config.scene.height_band;
        let core = SessionCore::new(manifest, config)?;
        let mask = MapSlice::from_mask(&project_walkable(&core.field_job().grid, band), 1);
        Ok((core, mask))
    })
    .await;
    let (core, mask) = match built {
        Ok(Ok(v)) => v,
        Ok(Err(e)) => return rejection(e),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let body = scene_body(&core, mask);
    let handle = spawn_session(core, app.inner.period, body);
    let id = app.inner.next_id.fetch_add(1, Ordering::Relaxed);
    let reply = serde_json::json!({ "proto": PROTO, "id": id, "state": handle.initial });
    app.inner.sessions.lock().expect("session table poisoned").insert(id, Arc::new(handle));
    json(StatusCode::OK, reply.to_string())
}

async fn delete_session(State(app): State<AppState>, Path(id): Path<u64>) -> Response {
    match app.inner.sessions.lock().expect("session table poisoned").remove(&id) {
        Some(_) => StatusCode::NO_CONTENT.into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no session {id}")),
    }
}

/// Queue a goal with the writer. `None` when the session has stopped.
async fn request_goal(handle: &SessionHandle, x: f64, y: f64) -> Option<Result<AckEvent, ErrorEvent>> {
    let (reply, rx) = oneshot::channel();
    handle.requests.send(Request::Goal { x, y, reply }).await.ok()?;
    rx.await.ok()
}

async fn set_goal(State(app): State<AppState>, Path(id): Path<u64>, body: Bytes) -> Response {
    let handle = match app.session(id) {
        Ok(h) => h,
        Err(r) => return r,
    };
    let cmd = match std::str::from_utf8(&body).map_err(|e| SessionError::BadCommand(e.to_string())).and_then(parse_goal_command) {
        Ok(c) => c,
        Err(e) => return rejection(e),
    };
    match request_goal(&handle, cmd.x, cmd.y).await {
        Some(Ok(ack)) => json(StatusCode::OK, Event::Ack(ack).to_json()),
        Some(Err(e)) => json(StatusCode::UNPROCESSABLE_ENTITY, Event::Error(e).to_json()),
        None => gone(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Teleport {
    x: f64,
    y: f64,
}

async fn teleport(State(app): State<AppState>, Path(id): Path<u64>, body: Bytes) -> Response {
    let handle = match app.session(id) {
        Ok(h) => h,
        Err(r) => return r,
    };
    let t: Teleport = match serde_json::from_slice(&body) {
        Ok(t) => t,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let (reply, rx) = oneshot::channel();
    if handle.requests.send(Request::Teleport { x: t.x, y: t.y, reply }).await.is_err() {
        return gone();
    }
    match rx.await {
        Ok(Ok(())) => json(StatusCode::OK, serde_json::json!({ "proto": PROTO }).to_string()),
        Ok(Err(e)) => json(StatusCode::UNPROCESSABLE_ENTITY, Event::Error(e).to_json()),
        Err(_) => gone(),
    }
}

async fn scene(State(app): State<AppState>, Path(id): Path<u64>) -> Response {
    match app.session(id) {
        Ok(h) => json(StatusCode::OK, h.scene_json.to_string()),
        Err(r) => r,
    }
}

async fn stream(State(app): State<AppState>, Path(id): Path<u64>, ws: WebSocketUpgrade) -> Response {
    match app.session(id) {
        Ok(h) => ws.on_upgrade(move |socket| pump(socket, h)),
        Err(r) => r,
    }
}

/// Forward published events to one client and queue its goal commands.
async fn pump(socket: WebSocket, handle: Arc<SessionHandle>) {
    let mut events = handle.events.subscribe();
    let (mut tx, mut rx) = socket.split();
    loop {
        tokio::select! {
            ev = events.recv() => match ev {
                Ok(text) => {
                    if tx.send(Message::Text(text.as_ref().into())).await.is_err() {
                        break;
                    }
                }
                // a slow client skips frames rather than stalling the session
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            },
            msg = rx.next() => match msg {
                Some(Ok(Message::Text(text))) => {
                    // acks arrive through the broadcast; failures go to the sender only
                    let failure = match parse_goal_command(text.as_str()) {
                        Ok(cmd) => match request_goal(&handle, cmd.x, cmd.y).await {
                            Some(Ok(_)) => None,
                            Some(Err(e)) => Some(e),
                            None => break,
                        },
                        Err(e) => Some(ErrorEvent { proto: PROTO, tick: 0, message: e.to_string() }),
                    };
                    if let Some(e) = failure {
                        if tx.send(Message::Text(Event::Error(e).to_json().into())).await.is_err() {
                            break;
                        }
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}
