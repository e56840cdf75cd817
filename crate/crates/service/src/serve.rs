//! The streaming service: newline-delimited events in, summaries out.
//!
//! Each session gets a worker task that resolves its summary requests one at
//! a time, so a session's outbound events keep window order with the global
//! summary last, while different sessions summarize concurrently (bounded by
//! a global in-flight cap). A backend failure or timeout becomes an `error`
//! event for that window and the session carries on.

use std::collections::HashMap;
use std::io;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rtsum_core::session::{SessionEngine, SummaryRequest};
use rtsum_core::wire::{emit_event, parse_event, WireEvent};
use rtsum_core::{Scope, WindowPolicy};
use serde::{Deserialize, Serialize};
use tokio::io::{AsyncBufReadExt, AsyncRead, AsyncWrite, AsyncWriteExt, BufReader};
use tokio::net::TcpListener;
use tokio::sync::{mpsc, Semaphore};
use tokio::task::JoinHandle;
use tokio::time::Instant;
use tracing::{debug, info, warn};

use crate::backend::Summarizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServeConfig {
    pub policy: WindowPolicy,
    /// Sessions without events for this many seconds are ended automatically.
    pub idle_timeout: f64,
    /// Overall limit for resolving one summary request, retries included.
    pub summary_timeout: f64,
    /// Global cap on concurrent backend calls.
    pub max_in_flight: usize,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            policy: WindowPolicy::default(),
            idle_timeout: 600.0,
            summary_timeout: 120.0,
            max_in_flight: 16,
        }
    }
}

type Sink = mpsc::UnboundedSender<String>;

struct SessionHandle {
    requests: mpsc::UnboundedSender<SummaryRequest>,
    sink: Arc<Mutex<Sink>>,
    connection: u64,
    last_activity: Instant,
    worker: JoinHandle<()>,
}

#[derive(Default)]
struct HubState {
    engine: SessionEngine,
    handles: HashMap<String, SessionHandle>,
}

/// Session registry shared by every connection of one server.
pub struct Hub {
    config: ServeConfig,
    backend: Arc<dyn Summarizer>,
    limiter: Arc<Semaphore>,
    state: Mutex<HubState>,
    next_connection: AtomicU64,
}

fn send_line(sink: &Sink, event: &WireEvent) {
    match emit_event(event) {
        Ok(line) => {
            if sink.send(line).is_err() {
                warn!(session = event.session(), "connection closed, dropping {} event", event.type_name());
            }
        }
        Err(e) => warn!("refusing to emit event: {e}"),
    }
}

async fn resolve(
    backend: &dyn Summarizer,
    limiter: &Semaphore,
    timeout: Duration,
    request: &SummaryRequest,
) -> WireEvent {
    let task = request.task();
    let result = {
        let _permit = limiter.acquire().await.expect("limiter never closed");
        tokio::time::timeout(timeout, backend.summarize(&task)).await
    };
    let failure = match result {
        Ok(Ok(text)) => {
            return match request.scope {
                Scope::Local => WireEvent::LocalSummary {
                    session: request.session_id.clone(),
                    window_index: request.window_index.unwrap_or_default(),
                    utterance_ids: request.utterance_ids(),
                    text,
                },
                Scope::Global => WireEvent::GlobalSummary {
                    session: request.session_id.clone(),
                    utterance_ids: request.utterance_ids(),
                    text,
                },
            }
        }
        Ok(Err(e)) => e.to_string(),
        Err(_) => format!("summary timed out after {timeout:?}"),
    };
    warn!(session = %request.session_id, window = ?request.window_index, "{} summary failed: {failure}", request.scope);
    WireEvent::error(
        request.session_id.clone(),
        request.window_index,
        format!("{} summary failed: {failure}", request.scope),
    )
}

impl Hub {
    pub fn new(config: ServeConfig, backend: Arc<dyn Summarizer>) -> Arc<Self> {
        Arc::new(Self {
            limiter: Arc::new(Semaphore::new(config.max_in_flight.max(1))),
            config,
            backend,
            state: Mutex::new(HubState::default()),
            next_connection: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &ServeConfig {
        &self.config
    }

    fn spawn_worker(&self, sink: Arc<Mutex<Sink>>) -> (mpsc::UnboundedSender<SummaryRequest>, JoinHandle<()>) {
        let (tx, mut rx) = mpsc::unbounded_channel::<SummaryRequest>();
        let backend = Arc::clone(&self.backend);
        let limiter = Arc::clone(&self.limiter);
        let timeout = Duration::from_secs_f64(self.config.summary_timeout);
        let worker = tokio::spawn(async move {
            while let Some(request) = rx.recv().await {
                let event = resolve(backend.as_ref(), &limiter, timeout, &request).await;
                let current = sink.lock().expect("sink lock").clone();
                send_line(&current, &event);
            }
        });
        (tx, worker)
    }

    fn dispatch(state: &HubState, session: &str, requests: Vec<SummaryRequest>) {
        if let Some(handle) = state.handles.get(session) {
            for r in requests {
                debug!(session, window = ?r.window_index, scope = %r.scope, "summary requested");
                let _ = handle.requests.send(r);
            }
        }
    }

    /// Ends a session, queues its final requests and detaches it from the registry.
    fn close_session(state: &mut HubState, session: &str) -> Option<JoinHandle<()>> {
        let requests = state.engine.end_session(session).ok()?;
        Self::dispatch(state, session, requests);
        state.engine.remove(session);
        // dropping the request sender lets the worker exit once drained
        state.handles.remove(session).map(|h| h.worker)
    }

    /// Applies one inbound line. Immediate errors go straight to `sink`;
    /// returns workers of sessions this line ended.
    fn handle_line(&self, line: &str, sink: &Sink, connection: u64) -> Option<JoinHandle<()>> {
        let event = match parse_event(line) {
            Ok(e) => e,
            Err(e) => {
                let session = serde_json::from_str::<serde_json::Value>(line)
                    .ok()
                    .and_then(|v| v.get("session")?.as_str().map(str::to_owned))
                    .unwrap_or_default();
                send_line(sink, &WireEvent::error(session, None, e.to_string()));
                return None;
            }
        };
        let mut state = self.state.lock().expect("hub lock");
        match event {
            WireEvent::Utterance { session, utterance } => {
                if !state.engine.contains_open(&session) {
                    if let Err(e) = state.engine.new_session(&session, self.config.policy) {
                        send_line(sink, &WireEvent::error(session, None, e.to_string()));
                        return None;
                    }
                    let shared_sink = Arc::new(Mutex::new(sink.clone()));
                    let (requests, worker) = self.spawn_worker(Arc::clone(&shared_sink));
                    info!(session, "session opened");
                    state.handles.insert(
                        session.clone(),
                        SessionHandle {
                            requests,
                            sink: shared_sink,
                            connection,
                            last_activity: Instant::now(),
                            worker,
                        },
                    );
                }
                if let Some(handle) = state.handles.get_mut(&session) {
                    handle.last_activity = Instant::now();
                    if handle.connection != connection {
                        handle.connection = connection;
                        *handle.sink.lock().expect("sink lock") = sink.clone();
                    }
                }
                match state.engine.ingest(&session, utterance) {
                    Ok(requests) => Self::dispatch(&state, &session, requests),
                    Err(e) => send_line(sink, &WireEvent::error(session, None, e.to_string())),
                }
                None
            }
            WireEvent::EndOfConversation { session } => {
                if !state.engine.contains_open(&session) {
                    send_line(sink, &WireEvent::error(session.clone(), None, format!("unknown session {session:?}")));
                    return None;
                }
                if let Some(handle) = state.handles.get_mut(&session) {
                    if handle.connection != connection {
                        handle.connection = connection;
                        *handle.sink.lock().expect("sink lock") = sink.clone();
                    }
                }
                info!(session, "session ended");
                Self::close_session(&mut state, &session)
            }
            other => {
                send_line(
                    sink,
                    &WireEvent::error(
                        other.session().to_owned(),
                        None,
                        format!("{} events are outbound only", other.type_name()),
                    ),
                );
                None
            }
        }
    }

    /// Ends every session idle for longer than the configured timeout.
    pub fn end_idle_sessions(&self) -> usize {
        let limit = Duration::from_secs_f64(self.config.idle_timeout);
        let mut state = self.state.lock().expect("hub lock");
        let idle: Vec<String> = state
            .handles
            .iter()
            .filter(|(_, h)| h.last_activity.elapsed() >= limit)
            .map(|(id, _)| id.clone())
            .collect();
        for id in &idle {
            info!(session = %id, "ending idle session");
            Self::close_session(&mut state, id);
        }
        idle.len()
    }

    fn end_connection_sessions(&self, connection: u64) -> Vec<JoinHandle<()>> {
        let mut state = self.state.lock().expect("hub lock");
        let owned: Vec<String> = state
            .handles
            .iter()
            .filter(|(_, h)| h.connection == connection)
            .map(|(id, _)| id.clone())
            .collect();
        owned
            .iter()
            .filter_map(|id| Self::close_session(&mut state, id))
            .collect()
    }

    pub fn open_sessions(&self) -> usize {
        self.state.lock().expect("hub lock").handles.len()
    }

    /// Periodically ends idle sessions until the returned handle is aborted.
    pub fn spawn_reaper(self: &Arc<Self>) -> JoinHandle<()> {
        let hub = Arc::clone(self);
        let period = Duration::from_secs_f64((self.config.idle_timeout / 4.0).clamp(0.01, 5.0));
        tokio::spawn(async move {
            let mut ticker = tokio::time::interval(period);
            loop {
                ticker.tick().await;
                hub.end_idle_sessions();
            }
        })
    }

    /// Serves one transport connection until its input ends.
    ///
    /// With `end_on_eof`, sessions fed by this connection are ended when the
    /// input closes cleanly and their remaining summaries are written before
    /// returning. Otherwise they stay open for a reconnect or the idle timeout.
    pub async fn run_connection<R, W>(self: &Arc<Self>, reader: R, writer: W, end_on_eof: bool) -> io::Result<()>
    where
        R: AsyncRead + Unpin,
        W: AsyncWrite + Unpin + Send + 'static,
    {
        let connection = self.next_connection.fetch_add(1, Ordering::Relaxed);
        let (out_tx, mut out_rx) = mpsc::unbounded_channel::<String>();
        let writer_task = tokio::spawn(async move {
            let mut writer = writer;
            while let Some(line) = out_rx.recv().await {
                writer.write_all(line.as_bytes()).await?;
                writer.write_all(b"\n").await?;
                writer.flush().await?;
            }
            writer.shutdown().await.or_else(|e| match e.kind() {
                io::ErrorKind::NotConnected | io::ErrorKind::BrokenPipe => Ok(()),
                _ => Err(e),
            })
        });

        let mut lines = BufReader::new(reader).lines();
        let mut finished = Vec::new();
        let mut clean_eof = false;
        loop {
            match lines.next_line().await {
                Ok(Some(line)) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    finished.extend(self.handle_line(&line, &out_tx, connection));
                }
                Ok(None) => {
                    clean_eof = true;
                    break;
                }
                Err(e) => {
                    warn!(connection, "transport read failed: {e}; sessions kept until idle timeout");
                    break;
                }
            }
        }
        if end_on_eof && clean_eof {
            finished.extend(self.end_connection_sessions(connection));
        }
        for worker in finished {
            let _ = worker.await;
        }
        drop(out_tx);
        if end_on_eof {
            writer_task.await.map_err(io::Error::other)??;
        }
        Ok(())
    }
}

/// Runs a single-stream service (e.g. stdin/stdout) until input ends.
pub async fn run_serve<R, W>(config: ServeConfig, backend: Arc<dyn Summarizer>, reader: R, writer: W) -> io::Result<()>
where
    R: AsyncRead + Unpin,
    W: AsyncWrite + Unpin + Send + 'static,
{
    config.policy.validate().map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let hub = Hub::new(config, backend);
    let reaper = hub.spawn_reaper();
    let result = hub.run_connection(reader, writer, true).await;
    reaper.abort();
    result
}

/// Accepts connections forever; sessions survive disconnects until they idle out.
pub async fn serve_tcp(hub: Arc<Hub>, listener: TcpListener) -> io::Result<()> {
    let _reaper = hub.spawn_reaper();
    info!(addr = ?listener.local_addr()?, "listening");
    loop {
        let (stream, peer) = listener.accept().await?;
        let hub = Arc::clone(&hub);
        tokio::spawn(async move {
            info!(%peer, "connection opened");
            let (reader, writer) = stream.into_split();
            if let Err(e) = hub.run_connection(reader, writer, false).await {
                warn!(%peer, "connection error: {e}");
            }
            info!(%peer, "connection closed");
        });
    }
}
