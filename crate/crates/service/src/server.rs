//! HTTP transport for sessions: request/response endpoints, long-polling
//! and a server-sent event stream.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tokio::sync::watch;

use crate::session::{Session, SessionConfig, SessionError};
use crate::wire::{CreateSession, Created, ErrorBody, ErrorCode, ErrorDetail, Event, TextBody, SCHEMA_DOC};

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);
/// Longest a long-poll request may wait.
pub const MAX_WAIT: Duration = Duration::from_secs(30);

struct Handle {
    session: Mutex<Session>,
    /// Carries the event count; bumped after every append.
    events: watch::Sender<u64>,
}

impl Handle {
    fn touch(&self) {
        self.session.lock().expect("session lock").last_touch = Instant::now();
    }
}

pub struct AppState {
    sessions: Mutex<HashMap<String, Arc<Handle>>>,
    config: SessionConfig,
    pub idle_timeout: Duration,
}

impl AppState {
    pub fn new(config: SessionConfig, idle_timeout: Duration) -> Arc<Self> {
        Arc::new(Self { sessions: Mutex::new(HashMap::new()), config, idle_timeout })
    }

    fn get(&self, id: &str) -> Result<Arc<Handle>, SessionError> {
        let h = self.sessions.lock().expect("store lock").get(id).cloned();
        let h = h.ok_or_else(|| SessionError::new(ErrorCode::UnknownSession, format!("no session `{id}`")))?;
        h.touch();
        Ok(h)
    }

    /// Drops sessions idle for longer than the timeout; returns how many.
    pub fn reap(&self, now: Instant) -> usize {
        let mut map = self.sessions.lock().expect("store lock");
        let before = map.len();
        map.retain(|_, h| now.duration_since(h.session.lock().expect("session lock").last_touch) < self.idle_timeout);
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Runs automatic work for a session off the async workers.
fn drive(h: Arc<Handle>) {
    tokio::task::spawn_blocking(move || loop {
        let more = {
            let mut s = h.session.lock().expect("session lock");
            let more = s.advance();
            s.last_touch = Instant::now();
            h.events.send_replace(s.event_count());
            more
        };
        if !more {
            break;
        }
    });
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(ErrorBody { error: ErrorDetail { code: self.code, message: self.message } })).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, SessionError> {
    serde_json::from_slice(body).map_err(|e| SessionError::new(ErrorCode::BadRequest, e.to_string()))
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

async fn create(State(app): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, SessionError> {
    let req: CreateSession = parse_body(&body)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::create(id.clone(), &req, &app.config)?;
    let (tx, _) = watch::channel(session.event_count());
    let h = Arc::new(Handle { session: Mutex::new(session), events: tx });
    app.sessions.lock().expect("store lock").insert(id.clone(), h.clone());
    drive(h);
    Ok((StatusCode::CREATED, Json(Created { id })))
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    since: u64,
    #[serde(default)]
    wait_ms: u64,
}

async fn events(State(app): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<EventsQuery>) -> Result<impl IntoResponse, SessionError> {
    let h = app.get(&id)?;
    let mut rx = h.events.subscribe();
    let deadline = tokio::time::Instant::now() + Duration::from_millis(q.wait_ms).min(MAX_WAIT);
    loop {
        let out = h.session.lock().expect("session lock").events_since(q.since);
        if !out.events.is_empty() || out.done || tokio::time::Instant::now() >= deadline {
            return Ok(Json(out));
        }
        if tokio::time::timeout_at(deadline, rx.changed()).await.is_err() {
            let out = h.session.lock().expect("session lock").events_since(q.since);
            return Ok(Json(out));
        }
    }
}

#[derive(Debug, Deserialize)]
struct StreamQuery {
    since: Option<u64>,
}

struct StreamState {
    h: Arc<Handle>,
    rx: watch::Receiver<u64>,
    cursor: u64,
    buffer: std::collections::VecDeque<Event>,
    done: bool,
}

fn event_stream(st: StreamState) -> impl Stream<Item = Result<SseEvent, Infallible>> {
    stream::unfold(st, |mut st| async move {
        loop {
            if let Some(ev) = st.buffer.pop_front() {
                st.cursor = ev.cursor + 1;
                let data = serde_json::to_string(&ev).expect("events serialize");
                return Some((Ok(SseEvent::default().id(ev.cursor.to_string()).event("session").data(data)), st));
            }
            if st.done {
                return None;
            }
            let out = st.h.session.lock().expect("session lock").events_since(st.cursor);
            st.done = out.done;
            st.buffer.extend(out.events);
            if st.buffer.is_empty() && !st.done && st.rx.changed().await.is_err() {
                return None;
            }
        }
    })
}

async fn stream_events(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<StreamQuery>,
    headers: HeaderMap,
) -> Result<impl IntoResponse, SessionError> {
    let h = app.get(&id)?;
    // A reconnecting client resumes after the last event it saw.
    let resume = headers.get("last-event-id").and_then(|v| v.to_str().ok()).and_then(|v| v.parse::<u64>().ok()).map(|c| c + 1);
    let cursor = q.since.or(resume).unwrap_or(0);
    let rx = h.events.subscribe();
    let st = StreamState { h, rx, cursor, buffer: Default::default(), done: false };
    Ok(Sse::new(event_stream(st)).keep_alive(KeepAlive::default()))
}

async fn answer(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, SessionError> {
    let req: TextBody = parse_body(&body)?;
    let h = app.get(&id)?;
    {
        let mut s = h.session.lock().expect("session lock");
        s.answer(&req.text)?;
        h.events.send_replace(s.event_count());
    }
    drive(h.clone());
    let state = h.session.lock().expect("session lock").state();
    Ok(Json(state))
}

async fn act(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<impl IntoResponse, SessionError> {
    let req: TextBody = parse_body(&body)?;
    let h = app.get(&id)?;
    let mut s = h.session.lock().expect("session lock");
    s.act(&req.text)?;
    h.events.send_replace(s.event_count());
    Ok(Json(s.state()))
}

async fn state(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, SessionError> {
    let h = app.get(&id)?;
    let s = h.session.lock().expect("session lock").state();
    Ok(Json(s))
}

async fn close(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, SessionError> {
    let h = app.sessions.lock().expect("store lock").remove(&id);
    let h = h.ok_or_else(|| SessionError::new(ErrorCode::UnknownSession, format!("no session `{id}`")))?;
    let s = h.session.lock().expect("session lock").state();
    Ok(Json(s))
}

async fn schema() -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], SCHEMA_DOC)
}

/// Returns the request body unchanged, for clients checking that text
/// survives the round trip.
async fn echo(body: Bytes) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/octet-stream")], body)
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/schema", get(schema))
        .route("/v1/echo", post(echo))
        .route("/v1/sessions", post(create))
        .route("/v1/sessions/{id}", get(state).delete(close))
        .route("/v1/sessions/{id}/events", get(events))
        .route("/v1/sessions/{id}/stream", get(stream_events))
        .route("/v1/sessions/{id}/answer", post(answer))
        .route("/v1/sessions/{id}/act", post(act))
        .with_state(app)
}

/// Periodically drops idle sessions.
pub fn spawn_reaper(app: Arc<AppState>) -> tokio::task::JoinHandle<()> {
    let period = (app.idle_timeout / 4).clamp(Duration::from_millis(10), Duration::from_secs(30));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            app.reap(Instant::now());
        }
    })
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, app: Arc<AppState>) -> std::io::Result<()> {
    spawn_reaper(app.clone());
    axum::serve(listener, router(app)).await
}
