//! HTTP and WebSocket front end: `GET /v1/charts`,
//! `GET /v1/charts/{id}/baseline.png` and the `/v1/session` socket.

use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, Mutex};

use arlens_core::service::{decode_text, encode_png, FrameJob, MessageKind, Server, WireMessage};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use tokio::sync::{mpsc, Notify};
use tower_http::services::ServeDir;

use crate::config::ServeConfig;

pub fn build_server(cfg: &ServeConfig) -> anyhow::Result<Server> {
    let bundles = arlens_core::bundle::load_bundles(&cfg.bundle_dir)?;
    let service = arlens_core::service::ServiceConfig {
        credentials: cfg.credentials.clone(),
        tracker: cfg.tracker,
    };
    Ok(Server::new(bundles, service))
}

pub fn router(server: Arc<Server>, static_dir: Option<&std::path::Path>) -> Router {
    let api = Router::new()
        .route("/v1/charts", get(list_charts))
        .route("/v1/charts/{id}/baseline.png", get(baseline_png))
        .route("/v1/session", get(session_socket))
        .with_state(server);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn list_charts(State(server): State<Arc<Server>>) -> impl IntoResponse {
    Json(server.charts())
}

async fn baseline_png(State(server): State<Arc<Server>>, Path(id): Path<String>) -> Response {
    match server.bundle(&id) {
        Some(b) => (
            [(header::CONTENT_TYPE, "image/png")],
            encode_png(&b.baseline),
        )
            .into_response(),
        None => (StatusCode::NOT_FOUND, format!("no chart '{id}'")).into_response(),
    }
}

async fn session_socket(ws: WebSocketUpgrade, State(server): State<Arc<Server>>) -> Response {
    ws.on_upgrade(move |socket| run_socket(socket, server))
}

/// Frames waiting for the tracker, at most one per session. A newer frame
/// replaces an older one that has not started yet.
#[derive(Default)]
struct FrameSlots {
    jobs: Mutex<BTreeMap<String, FrameJob>>,
    ready: Notify,
}

impl FrameSlots {
    fn put(&self, job: FrameJob) {
        let replaced = self
            .jobs
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(job.session_id().to_string(), job);
        if let Some(old) = replaced {
            log::debug!("session {}: dropped a queued frame", old.session_id());
        }
        self.ready.notify_one();
    }

    fn take(&self) -> Vec<FrameJob> {
        std::mem::take(&mut *self.jobs.lock().unwrap_or_else(|p| p.into_inner()))
            .into_values()
            .collect()
    }
}

async fn frame_worker(
    server: Arc<Server>,
    slots: Arc<FrameSlots>,
    tx: mpsc::UnboundedSender<WireMessage>,
) {
    loop {
        slots.ready.notified().await;
        for job in slots.take() {
            let server = Arc::clone(&server);
            let tx = tx.clone();
            let done = tokio::task::spawn_blocking(move || {
                server.process_frame(job, &mut |m| {
                    let _ = tx.send(m);
                })
            })
            .await;
            if let Err(e) = done {
                log::error!("frame task failed: {e}");
            }
        }
    }
}

async fn run_socket(socket: WebSocket, server: Arc<Server>) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<WireMessage>();
    let writer = tokio::spawn(async move {
        while let Some(m) = rx.recv().await {
            if sink.send(Message::Text(m.to_json().into())).await.is_err() {
                break;
            }
        }
    });
    let slots = Arc::new(FrameSlots::default());
    let worker = tokio::spawn(frame_worker(
        Arc::clone(&server),
        Arc::clone(&slots),
        tx.clone(),
    ));
    let mut owned: HashSet<String> = HashSet::new();
    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => {
                let mut send = |m: WireMessage| {
                    let _ = tx.send(m);
                };
                match decode_text(&text) {
                    Ok(msg) if msg.kind == MessageKind::Create => {
                        server.handle_with(&msg, None, &mut |m| {
                            if m.kind == MessageKind::State {
                                if let Some(id) = &m.session_id {
                                    owned.insert(id.clone());
                                }
                            }
                            send(m)
                        });
                    }
                    Ok(msg) => server.handle_with(&msg, None, &mut send),
                    Err(_) => server.handle_text_with(&text, &mut send),
                }
            }
            Message::Binary(bytes) => match server.accept_binary(&bytes) {
                Ok(job) => slots.put(job),
                Err(replies) => replies.into_iter().for_each(|m| {
                    let _ = tx.send(m);
                }),
            },
            Message::Close(_) => break,
            _ => {}
        }
    }
    worker.abort();
    for id in &owned {
        server.close_session(id);
    }
    drop(tx);
    let _ = writer.await;
}

/// Binds, prints the listening address on stdout and serves forever.
pub async fn serve(cfg: ServeConfig) -> anyhow::Result<()> {
    let server = Arc::new(build_server(&cfg)?);
    let app = router(Arc::clone(&server), cfg.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(&cfg.bind).await?;
    let addr = listener.local_addr()?;
    println!(
        "listening on http://{addr} ({} charts)",
        server.charts().len()
    );
    use std::io::Write;
    let _ = std::io::stdout().flush();
    axum::serve(listener, app).await?;
    Ok(())
}
