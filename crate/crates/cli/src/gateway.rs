//! HTTP side of `simulate --serve`: the console page at `/` and the
//! websocket at `/ws`.

use std::io;
use std::net::SocketAddr;
use std::sync::{mpsc, Arc};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, Response};
use axum::routing::get;
use axum::Router;
use diakit_runtime::sim::{Snapshot, SnapshotCell, SteeringHandle};
use tokio::sync::broadcast::error::{RecvError, TryRecvError};
use tokio::sync::{broadcast, watch};

use crate::wire;

const INDEX: &str = include_str!("../assets/index.html");

/// How long a closing session waits for the client's close frame.
const CLOSE_WAIT: Duration = Duration::from_secs(1);

/// Text frames published at each tick boundary, shared by every session.
pub type Feed = broadcast::Sender<Arc<Vec<String>>>;

pub fn feed() -> Feed {
    broadcast::channel(1024).0
}

/// Snapshot observer for [`Simulation::on_snapshot`]: publishes a snapshot
/// frame, followed by one event frame per record the first time a tick is
/// seen.
///
/// [`Simulation::on_snapshot`]: diakit_runtime::sim::Simulation::on_snapshot
pub fn publisher(feed: Feed) -> impl FnMut(&Arc<Snapshot>) + Send + 'static {
    let mut last_tick = None;
    move |snap| {
        let mut frames = vec![wire::snapshot(snap).to_string()];
        if last_tick != Some(snap.tick) {
            last_tick = Some(snap.tick);
            frames.extend(snap.events.iter().map(|e| wire::event(e).to_string()));
        }
        let _ = feed.send(Arc::new(frames));
    }
}

#[derive(Clone)]
struct AppState {
    steering: SteeringHandle,
    snapshots: SnapshotCell,
    feed: Feed,
    stop: watch::Receiver<bool>,
    /// Held by every session; the server waits for all clones to drop.
    _alive: tokio::sync::mpsc::Sender<()>,
}

pub struct Gateway {
    addr: SocketAddr,
    stop: watch::Sender<bool>,
    done: mpsc::Receiver<()>,
    thread: JoinHandle<io::Result<()>>,
}

impl Gateway {
    /// Serves on an already bound listener from a background thread.
    pub fn start(
        listener: std::net::TcpListener,
        steering: SteeringHandle,
        snapshots: SnapshotCell,
        feed: Feed,
    ) -> io::Result<Gateway> {
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let (stop, stop_rx) = watch::channel(false);
        let (done_tx, done) = mpsc::channel::<()>();
        let (alive, mut sessions) = tokio::sync::mpsc::channel::<()>(1);
        let state = AppState {
            steering,
            snapshots,
            feed,
            stop: stop_rx.clone(),
            _alive: alive,
        };
        let thread = thread::Builder::new().name("gateway".into()).spawn(move || {
            let _done = done_tx;
            let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                let app = Router::new()
                    .route("/", get(index))
                    .route("/ws", get(upgrade))
                    .with_state(state);
                let mut stop_rx = stop_rx;
                axum::serve(listener, app)
                    .with_graceful_shutdown(async move {
                        let _ = stop_rx.wait_for(|s| *s).await;
                    })
                    .await?;
                let _ = sessions.recv().await;
                Ok(())
            })
        })?;
        Ok(Gateway {
            addr,
            stop,
            done,
            thread,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Flushes pending frames to connected clients, closes their sockets and
    /// stops the server, waiting at most `grace`.
    pub fn shutdown(self, grace: Duration) -> io::Result<()> {
        let _ = self.stop.send(true);
        match self.done.recv_timeout(grace) {
            Err(mpsc::RecvTimeoutError::Timeout) => Ok(()),
            _ => self.thread.join().unwrap_or(Ok(())),
        }
    }
}

async fn index() -> Html<&'static str> {
    Html(INDEX)
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| session(socket, state))
}

async fn send(socket: &mut WebSocket, text: String) -> bool {
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn session(mut socket: WebSocket, state: AppState) {
    let mut feed = state.feed.subscribe();
    let mut stop = state.stop.clone();
    if !send(&mut socket, wire::snapshot(&state.snapshots.latest()).to_string()).await {
        return;
    }
    while !*stop.borrow() {
        tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    let reply = wire::handle(&state.steering, text.as_str());
                    if !send(&mut socket, reply.to_string()).await {
                        return;
                    }
                }
                Some(Ok(Message::Binary(_))) => {
                    let reply = wire::error(serde_json::Value::Null, "binary frames are not supported");
                    if !send(&mut socket, reply.to_string()).await {
                        return;
                    }
                }
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => return,
                Some(Ok(_)) => {}
            },
            batch = feed.recv() => match batch {
                Ok(frames) => {
                    for f in frames.iter() {
                        if !send(&mut socket, f.clone()).await {
                            return;
                        }
                    }
                }
                Err(RecvError::Lagged(_)) => {
                    if !send(&mut socket, wire::snapshot(&state.snapshots.latest()).to_string()).await {
                        return;
                    }
                }
                Err(RecvError::Closed) => break,
            },
            _ = stop.changed() => {}
        }
    }
    loop {
        match feed.try_recv() {
            Ok(frames) => {
                for f in frames.iter() {
                    if !send(&mut socket, f.clone()).await {
                        return;
                    }
                }
            }
            Err(TryRecvError::Lagged(_)) => continue,
            Err(_) => break,
        }
    }
    if socket.send(Message::Close(None)).await.is_err() {
        return;
    }
    let _ = tokio::time::timeout(CLOSE_WAIT, async {
        while let Some(Ok(m)) = socket.recv().await {
            if matches!(m, Message::Close(_)) {
                break;
            }
        }
    })
    .await;
}
