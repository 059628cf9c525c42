//! HTTP and WebSocket server for human-vs-agent games.
//!
//! `POST /session` creates a game, `GET /session/{id}` returns its latest
//! snapshot, `POST /session/{id}/action` latches a human action and
//! `GET /session/{id}/stream` upgrades to a WebSocket that streams one
//! snapshot per tick and accepts `{"action": ...}` messages. The clock of a
//! session starts when its first stream connects.

mod session;
pub mod wire;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use pwlab::{GameParams, Player, RheaParams};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tower_http::services::ServeDir;

pub use session::{agent_seed, Registry, Session, SessionSettings};
use wire::{
    Accepted, ActionMessage, AgentChoice, CreateSession, Created, ErrorBody, SessionStatus,
    SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum PlayError {
    #[error("no session {0}")]
    NotFound(String),
    #[error("session {0} has finished")]
    Finished(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("session limit of {0} reached")]
    Full(usize),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

impl PlayError {
    fn status(&self) -> StatusCode {
        match self {
            PlayError::NotFound(_) => StatusCode::NOT_FOUND,
            PlayError::Finished(_) => StatusCode::CONFLICT,
            PlayError::Invalid(_) => StatusCode::BAD_REQUEST,
            PlayError::Full(_) => StatusCode::SERVICE_UNAVAILABLE,
            PlayError::Bind { .. } | PlayError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for PlayError {
    fn into_response(self) -> Response {
        (
            self.status(),
            Json(ErrorBody {
                v: SCHEMA_VERSION,
                error: self.to_string(),
            }),
        )
            .into_response()
    }
}

/// Server-wide defaults applied to create requests that omit a field.
#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub agent: RheaParams,
    pub tick_millis: u64,
    pub agent_budget: u64,
    pub game: GameParams,
    /// Directory of built UI assets served at `/`.
    pub static_dir: Option<PathBuf>,
    pub max_sessions: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            agent: RheaParams::BEST,
            tick_millis: 1000,
            agent_budget: 2000,
            game: GameParams::default(),
            static_dir: None,
            max_sessions: 256,
        }
    }
}

struct App {
    config: ServerConfig,
    sessions: Registry,
}

type Shared = Arc<App>;

pub fn router(config: ServerConfig) -> Router {
    let static_dir = config.static_dir.clone();
    let app = Arc::new(App {
        config,
        sessions: Registry::default(),
    });
    let api = Router::new()
        .route("/health", get(health))
        .route("/session", post(create))
        .route("/session/{id}", get(snapshot))
        .route("/session/{id}/action", post(action))
        .route("/session/{id}/stream", get(stream))
        .with_state(app);
    match static_dir {
        Some(dir) => {
            api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true))
        }
        None => api.route("/", get(placeholder_index)),
    }
}

pub async fn bind(addr: SocketAddr) -> Result<TcpListener, PlayError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| PlayError::Bind { addr, source })
}

pub async fn serve(listener: TcpListener, config: ServerConfig) -> Result<(), PlayError> {
    axum::serve(listener, router(config)).await?;
    Ok(())
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "v": SCHEMA_VERSION, "status": "ok" }))
}

async fn placeholder_index() -> Html<&'static str> {
    Html(
        "<!doctype html><title>pwlab</title><p>No UI assets configured. \
         Start the server with a static directory, or use the JSON API at /session.</p>",
    )
}

fn settings_from(
    req: CreateSession,
    defaults: &ServerConfig,
) -> Result<SessionSettings, PlayError> {
    let agent = match req.agent {
        None => defaults.agent,
        Some(AgentChoice::Params(p)) => p,
        Some(AgentChoice::Preset(name)) => RheaParams::preset(&name)
            .ok_or_else(|| PlayError::Invalid(format!("unknown agent preset {name:?}")))?,
    };
    let human = match req.human_seat {
        None => Player::P1,
        Some(n) => wire::seat_from_number(n)
            .ok_or_else(|| PlayError::Invalid(format!("humanSeat must be 1 or 2, got {n}")))?,
    };
    Ok(SessionSettings {
        agent,
        human,
        tick_millis: req.tick_millis.unwrap_or(defaults.tick_millis),
        seed: req.seed.unwrap_or_else(rand::random),
        game: req.game.unwrap_or_else(|| defaults.game.clone()),
        agent_budget: req.agent_budget.unwrap_or(defaults.agent_budget),
        lockstep: req.lockstep,
    })
}

async fn create(
    State(app): State<Shared>,
    body: Option<Json<CreateSession>>,
) -> Result<impl IntoResponse, PlayError> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let settings = settings_from(req, &app.config)?;
    let session = app.sessions.insert(settings, app.config.max_sessions)?;
    tracing::info!(id = %session.id, "session created");
    Ok((
        StatusCode::CREATED,
        Json(Created {
            v: SCHEMA_VERSION,
            id: session.id.clone(),
            snapshot: session.latest(),
        }),
    ))
}

async fn snapshot(
    State(app): State<Shared>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, PlayError> {
    Ok(Json(app.sessions.get(&id)?.latest()))
}

async fn action(
    State(app): State<Shared>,
    Path(id): Path<String>,
    Json(msg): Json<ActionMessage>,
) -> Result<impl IntoResponse, PlayError> {
    let tick = app.sessions.get(&id)?.submit(msg.action)?;
    Ok((
        StatusCode::ACCEPTED,
        Json(Accepted {
            v: SCHEMA_VERSION,
            accepted: true,
            tick,
        }),
    ))
}

async fn stream(
    State(app): State<Shared>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<impl IntoResponse, PlayError> {
    let session = app.sessions.get(&id)?;
    Ok(ws.on_upgrade(move |socket| pump(socket, session)))
}

fn to_text<T: serde::Serialize>(value: &T) -> Message {
    Message::Text(
        serde_json::to_string(value)
            .expect("wire types serialize")
            .into(),
    )
}

/// Sends the current snapshot, then every later one in order, while feeding
/// client action messages into the session.
async fn pump(socket: WebSocket, session: Arc<Session>) {
    let (mut tx, mut rx) = socket.split();
    let (reply_tx, mut replies) = mpsc::unbounded_channel::<Message>();

    let reader_session = session.clone();
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = rx.next().await {
            let text = match msg {
                Message::Text(t) => t,
                Message::Close(_) => break,
                _ => continue,
            };
            let reply = match serde_json::from_str::<ActionMessage>(&text) {
                Ok(m) => reader_session.submit(m.action).err().map(|e| e.to_string()),
                Err(e) => Some(format!("bad message: {e}")),
            };
            if let Some(error) = reply {
                let _ = reply_tx.send(to_text(&ErrorBody {
                    v: SCHEMA_VERSION,
                    error,
                }));
            }
        }
    });

    let mut published = session.subscribe();
    // Resume from the tick that is current now.
    let mut next = session.published().saturating_sub(1);
    session.start();
    loop {
        let batch = session.snapshots_from(next);
        next += batch.len();
        let mut done = false;
        for s in &batch {
            if tx.send(to_text(s)).await.is_err() {
                reader.abort();
                return;
            }
            done |= s.status == SessionStatus::Finished;
        }
        if done {
            break;
        }
        tokio::select! {
            changed = published.changed() => {
                if changed.is_err() {
                    break;
                }
            }
            reply = replies.recv() => match reply {
                Some(m) => {
                    if tx.send(m).await.is_err() {
                        break;
                    }
                }
                None => break,
            },
        }
    }
    let _ = tx.send(Message::Close(None)).await;
    reader.abort();
}
