//! HTTP + WebSocket service for UI clients.
//!
//! Static assets come from a directory when one is given, otherwise a small
//! built-in page is served at `/`. Each WebSocket client gets an unbounded
//! text queue (state and events are lossless and ordered) and a two-slot
//! video queue that drops messages when the client falls behind, so the
//! frame loop never waits on a slow consumer.
//!
//! Inbound messages are parsed on the connection task and queued as
//! [`Control`]s for the frame loop, which applies them between frames.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc as std_mpsc, Arc, Mutex};
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use thiserror::Error;
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

use crate::protocol::{Inbound, Outbound};

pub const VIDEO_QUEUE: usize = 2;

const PLACEHOLDER_PAGE: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>FIZI</title></head>
<body><h1>FIZI runtime</h1>
<p>The UI bundle was not supplied. Start the runtime with <code>--ui-dir</code>
or connect a client to <code>/ws</code>.</p></body></html>
";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },

    #[error("cannot start service runtime: {0}")]
    Runtime(std::io::Error),

    #[error("UI directory {0} does not exist")]
    UiDir(PathBuf),
}

/// An inbound request, tagged with the client that sent it.
#[derive(Clone, Debug, PartialEq)]
pub struct Control {
    pub client: u64,
    pub message: Inbound,
}

struct Client {
    text: mpsc::UnboundedSender<String>,
    video: mpsc::Sender<Bytes>,
}

#[derive(Default)]
struct HubInner {
    clients: BTreeMap<u64, Client>,
    last_state: Option<String>,
    layout_xml: Option<String>,
}

/// Fan-out point shared by the frame loop and the connection tasks.
#[derive(Default)]
pub struct Hub {
    inner: Mutex<HubInner>,
    next_id: AtomicU64,
    dropped_video: AtomicU64,
}

impl Hub {
    pub fn client_count(&self) -> usize {
        self.inner.lock().unwrap().clients.len()
    }

    pub fn dropped_video(&self) -> u64 {
        self.dropped_video.load(Ordering::Relaxed)
    }

    pub fn broadcast(&self, msg: &Outbound) {
        let text = msg.to_json();
        let mut inner = self.inner.lock().unwrap();
        if matches!(msg, Outbound::State { .. }) {
            inner.last_state = Some(text.clone());
        }
        if let Outbound::Layout { xml } = msg {
            inner.layout_xml = Some(xml.clone());
        }
        inner.clients.retain(|_, c| c.text.send(text.clone()).is_ok());
    }

    pub fn send_to(&self, client: u64, msg: &Outbound) {
        let inner = self.inner.lock().unwrap();
        if let Some(c) = inner.clients.get(&client) {
            let _ = c.text.send(msg.to_json());
        }
    }

    /// Offers a video message to every client; full queues drop it.
    pub fn offer_video(&self, payload: Vec<u8>) {
        let payload = Bytes::from(payload);
        let inner = self.inner.lock().unwrap();
        for c in inner.clients.values() {
            if c.video.try_send(payload.clone()).is_err() {
                self.dropped_video.fetch_add(1, Ordering::Relaxed);
            }
        }
    }

    fn register(&self) -> (u64, mpsc::UnboundedReceiver<String>, mpsc::Receiver<Bytes>) {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (text_tx, text_rx) = mpsc::unbounded_channel();
        let (video_tx, video_rx) = mpsc::channel(VIDEO_QUEUE);
        let mut inner = self.inner.lock().unwrap();
        if let Some(xml) = &inner.layout_xml {
            let _ = text_tx.send(Outbound::Layout { xml: xml.clone() }.to_json());
        }
        if let Some(state) = &inner.last_state {
            let _ = text_tx.send(state.clone());
        }
        inner.clients.insert(
            id,
            Client {
                text: text_tx,
                video: video_tx,
            },
        );
        (id, text_rx, video_rx)
    }

    fn unregister(&self, id: u64) {
        self.inner.lock().unwrap().clients.remove(&id);
    }
}

#[derive(Clone)]
struct AppState {
    hub: Arc<Hub>,
    controls: std_mpsc::Sender<Control>,
}

/// A running service. Dropping it stops the server.
pub struct ServiceHandle {
    local_addr: SocketAddr,
    hub: Arc<Hub>,
    controls: std_mpsc::Receiver<Control>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn hub(&self) -> &Hub {
        &self.hub
    }

    /// Pending inbound requests, oldest first.
    pub fn drain_controls(&self) -> Vec<Control> {
        self.controls.try_iter().collect()
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `addr` and serves the UI on a background thread.
pub fn serve_ui(addr: SocketAddr, ui_dir: Option<PathBuf>) -> Result<ServiceHandle, ServiceError> {
    if let Some(dir) = &ui_dir {
        if !dir.is_dir() {
            return Err(ServiceError::UiDir(dir.clone()));
        }
    }
    let listener =
        std::net::TcpListener::bind(addr).map_err(|source| ServiceError::Bind { addr, source })?;
    let local_addr = listener
        .local_addr()
        .map_err(|source| ServiceError::Bind { addr, source })?;
    listener
        .set_nonblocking(true)
        .map_err(|source| ServiceError::Bind { addr, source })?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .thread_name("fizi-service")
        .enable_all()
        .build()
        .map_err(ServiceError::Runtime)?;

    let hub = Arc::new(Hub::default());
    let (controls_tx, controls_rx) = std_mpsc::channel();
    let state = AppState {
        hub: hub.clone(),
        controls: controls_tx,
    };
    let router = Router::new().route("/ws", get(ws_upgrade));
    let router = match ui_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    }
    .with_state(state);

    let (shutdown_tx, shutdown_rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("fizi-service".into())
        .spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        log::error!("service listener: {e}");
                        return;
                    }
                };
                tokio::select! {
                    r = axum::serve(listener, router) => {
                        if let Err(e) = r {
                            log::error!("service stopped: {e}");
                        }
                    }
                    _ = shutdown_rx => {}
                }
            });
            runtime.shutdown_timeout(std::time::Duration::from_millis(200));
        })
        .map_err(ServiceError::Runtime)?;

    log::info!("UI service listening on http://{local_addr}");
    Ok(ServiceHandle {
        local_addr,
        hub,
        controls: controls_rx,
        shutdown: Some(shutdown_tx),
        thread: Some(thread),
    })
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client_session(socket, state))
}

async fn client_session(socket: WebSocket, state: AppState) {
    use futures_util::{SinkExt, StreamExt};

    let (id, mut text_rx, mut video_rx) = state.hub.register();
    let (mut tx, mut rx) = socket.split();

    let writer = tokio::spawn(async move {
        loop {
            let msg = tokio::select! {
                biased;
                t = text_rx.recv() => match t {
                    Some(t) => Message::Text(t.into()),
                    None => break,
                },
                v = video_rx.recv() => match v {
                    Some(v) => Message::Binary(v),
                    None => break,
                },
            };
            if tx.send(msg).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = rx.next().await {
        match msg {
            Message::Text(text) => match Inbound::parse(text.as_str()) {
                Ok(message) => {
                    let _ = state.controls.send(Control { client: id, message });
                }
                Err(e) => state.hub.send_to(id, &Outbound::error(e)),
            },
            Message::Binary(_) => state
                .hub
                .send_to(id, &Outbound::error("binary messages are not accepted")),
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => {}
        }
    }
    state.hub.unregister(id);
    writer.abort();
}
