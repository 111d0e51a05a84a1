//! TCP endpoint: one simulation thread owns the simulator; per-connection
//! reader threads enqueue edits and writer threads drain per-client outboxes.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender, TrySendError};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::protocol::{ClientMessage, ConfigMessage, FrameMessage, ServerMessage, PROTOCOL_VERSION};
use super::ServiceError;
use crate::sim::Simulator;

#[derive(Clone, Debug)]
pub struct ServeConfig {
    /// Upper bound on broadcast frames per second.
    pub max_fps: f64,
    /// Capacity of the shared edit queue.
    pub edit_queue: usize,
    /// Frames buffered per client before new frames are dropped for it.
    pub client_frames: usize,
    /// Optional cap on simulation steps per second (free-running when `None`).
    pub step_rate: Option<f64>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            max_fps: 60.0,
            edit_queue: 64,
            client_frames: 8,
            step_rate: None,
        }
    }
}

struct Outbox {
    state: Mutex<OutboxState>,
    ready: Condvar,
}

#[derive(Default)]
struct OutboxState {
    lines: VecDeque<(String, bool)>,
    frames: usize,
    dropped: u64,
    closed: bool,
}

impl Outbox {
    fn new() -> Arc<Self> {
        Arc::new(Self {
            state: Mutex::new(OutboxState::default()),
            ready: Condvar::new(),
        })
    }

    /// Queue a message; frames are dropped when the client is behind.
    fn push(&self, line: String, is_frame: bool, frame_cap: usize) {
        let mut st = self.state.lock().unwrap();
        if st.closed {
            return;
        }
        if is_frame {
            if st.frames >= frame_cap {
                st.dropped += 1;
                return;
            }
            st.frames += 1;
        }
        st.lines.push_back((line, is_frame));
        self.ready.notify_one();
    }

    fn pop(&self) -> Option<String> {
        let mut st = self.state.lock().unwrap();
        loop {
            if let Some((line, is_frame)) = st.lines.pop_front() {
                if is_frame {
                    st.frames -= 1;
                }
                return Some(line);
            }
            if st.closed {
                return None;
            }
            st = self.ready.wait(st).unwrap();
        }
    }

    fn close(&self) {
        self.state.lock().unwrap().closed = true;
        self.ready.notify_all();
    }

    fn is_closed(&self) -> bool {
        self.state.lock().unwrap().closed
    }
}

struct Client {
    id: u64,
    outbox: Arc<Outbox>,
}

/// Broadcast state guarded together so a joining client sees the latest
/// config before any frame that depends on it.
struct Shared {
    config: String,
    clients: Vec<Client>,
}

struct Inner {
    shared: Mutex<Shared>,
    stop: AtomicBool,
    step: AtomicU64,
    frames: AtomicU64,
    next_client: AtomicU64,
    config: ServeConfig,
}

impl Inner {
    fn broadcast(&self, msg: &ServerMessage, is_frame: bool) {
        let line = msg.to_line();
        let mut shared = self.shared.lock().unwrap();
        shared.clients.retain(|c| !c.outbox.is_closed());
        for c in &shared.clients {
            c.outbox.push(line.clone(), is_frame, self.config.client_frames);
        }
    }

    fn send_to(&self, client: u64, msg: &ServerMessage) {
        let line = msg.to_line();
        let shared = self.shared.lock().unwrap();
        if let Some(c) = shared.clients.iter().find(|c| c.id == client) {
            c.outbox.push(line, false, 0);
        }
    }
}

struct Edit {
    client: u64,
    msg: ClientMessage,
}

pub struct ServiceHandle {
    addr: SocketAddr,
    inner: Arc<Inner>,
    threads: Vec<JoinHandle<()>>,
    sim: Option<JoinHandle<Simulator>>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Step index of the most recent completed step.
    pub fn step(&self) -> u64 {
        self.inner.step.load(Ordering::SeqCst)
    }

    pub fn frames_sent(&self) -> u64 {
        self.inner.frames.load(Ordering::SeqCst)
    }

    pub fn client_count(&self) -> usize {
        let mut shared = self.inner.shared.lock().unwrap();
        shared.clients.retain(|c| !c.outbox.is_closed());
        shared.clients.len()
    }

    /// Stop all threads and hand back the simulator.
    pub fn shutdown(mut self) -> Simulator {
        self.inner.stop.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
        for c in self.inner.shared.lock().unwrap().clients.drain(..) {
            c.outbox.close();
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        self.sim.take().expect("joined once").join().expect("simulation thread panicked")
    }

    /// Block until the simulation thread exits (never, unless stopped).
    pub fn wait(mut self) -> Simulator {
        self.sim.take().expect("joined once").join().expect("simulation thread panicked")
    }
}

fn config_message(sim: &Simulator, revision: u64, paused: bool) -> ConfigMessage {
    let family = sim.effective_family();
    let alpha = sim.alpha();
    ConfigMessage {
        revision,
        dim: family.dim(),
        k: sim.reduced().k,
        alpha,
        alpha_range: family.alpha_range,
        crease: sim.crease_vertices().unwrap_or_default(),
        cut: family.cut.as_ref().map(|m| m.vertices()),
        tracers: sim.tracers().iter().map(|t| t.x.clone()).collect(),
        weights: sim.tracers().iter().map(|t| family.weight(alpha, &t.x)).collect(),
        handles: sim.handles().to_vec(),
        out_of_family: sim.out_of_family(),
        paused,
        step: sim.state().step,
    }
}

/// Start the simulation loop and listen on `addr`.
pub fn serve(sim: Simulator, addr: impl ToSocketAddrs, config: ServeConfig) -> Result<ServiceHandle, ServiceError> {
    let listener = TcpListener::bind(addr).map_err(ServiceError::Bind)?;
    let local = listener.local_addr().map_err(ServiceError::Bind)?;
    let (tx, rx) = sync_channel::<Edit>(config.edit_queue.max(1));
    let inner = Arc::new(Inner {
        shared: Mutex::new(Shared {
            config: ServerMessage::Config(config_message(&sim, 0, false)).to_line(),
            clients: vec![],
        }),
        stop: AtomicBool::new(false),
        step: AtomicU64::new(sim.state().step),
        frames: AtomicU64::new(0),
        next_client: AtomicU64::new(0),
        config,
    });
    let sim_thread = {
        let inner = inner.clone();
        std::thread::Builder::new()
            .name("liftfield-sim".into())
            .spawn(move || run_simulation(sim, rx, &inner))
            .expect("spawn simulation thread")
    };
    let accept = {
        let inner = inner.clone();
        std::thread::Builder::new()
            .name("liftfield-accept".into())
            .spawn(move || accept_loop(listener, tx, inner))
            .expect("spawn accept thread")
    };
    log::info!("serving on {local}");
    Ok(ServiceHandle {
        addr: local,
        inner,
        threads: vec![accept],
        sim: Some(sim_thread),
    })
}

fn accept_loop(listener: TcpListener, edits: SyncSender<Edit>, inner: Arc<Inner>) {
    for stream in listener.incoming() {
        if inner.stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = stream else { continue };
        let id = inner.next_client.fetch_add(1, Ordering::SeqCst);
        let (edits, inner) = (edits.clone(), inner.clone());
        std::thread::spawn(move || handle_connection(id, stream, edits, inner));
    }
}

fn handle_connection(id: u64, stream: TcpStream, edits: SyncSender<Edit>, inner: Arc<Inner>) {
    let _ = stream.set_nodelay(true);
    let Ok(write_half) = stream.try_clone() else { return };
    let outbox = Outbox::new();
    let writer = {
        let outbox = outbox.clone();
        std::thread::spawn(move || {
            let mut w = write_half;
            while let Some(line) = outbox.pop() {
                if w.write_all(line.as_bytes()).is_err() {
                    break;
                }
            }
            outbox.close();
            let _ = w.shutdown(std::net::Shutdown::Both);
        })
    };
    let reply = |msg: ServerMessage| outbox.push(msg.to_line(), false, 0);
    let mut joined = false;
    for line in BufReader::new(stream).lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        if outbox.is_closed() || inner.stop.load(Ordering::SeqCst) {
            break;
        }
        let msg = match serde_json::from_str::<ClientMessage>(&line) {
            Ok(m) => m,
            Err(e) => {
                reply(ServerMessage::Error {
                    seq: None,
                    reason: format!("malformed message: {e}"),
                });
                continue;
            }
        };
        match (&msg, joined) {
            (ClientMessage::Hello { version }, false) => {
                if *version != PROTOCOL_VERSION {
                    reply(ServerMessage::Error {
                        seq: None,
                        reason: format!("unsupported protocol version {version} (server speaks {PROTOCOL_VERSION})"),
                    });
                    break;
                }
                reply(ServerMessage::Hello {
                    version: PROTOCOL_VERSION,
                    server: format!("liftfield {}", env!("CARGO_PKG_VERSION")),
                });
                let mut shared = inner.shared.lock().unwrap();
                outbox.push(shared.config.clone(), false, 0);
                shared.clients.push(Client {
                    id,
                    outbox: outbox.clone(),
                });
                joined = true;
            }
            (ClientMessage::Hello { .. }, true) => reply(ServerMessage::Error {
                seq: None,
                reason: "duplicate hello".into(),
            }),
            (_, false) => reply(ServerMessage::Error {
                seq: msg.seq(),
                reason: "send hello first".into(),
            }),
            (_, true) => {
                let seq = msg.seq();
                match edits.try_send(Edit { client: id, msg }) {
                    Ok(()) => {}
                    Err(TrySendError::Full(_)) => reply(ServerMessage::Error {
                        seq,
                        reason: "edit queue full; retry".into(),
                    }),
                    Err(TrySendError::Disconnected(_)) => break,
                }
            }
        }
    }
    outbox.close();
    let _ = writer.join();
}

fn run_simulation(mut sim: Simulator, edits: Receiver<Edit>, inner: &Inner) -> Simulator {
    let frame_interval = Duration::from_secs_f64(1.0 / inner.config.max_fps.max(1e-3));
    let step_interval = inner.config.step_rate.map(|r| Duration::from_secs_f64(1.0 / r.max(1e-3)));
    let mut last_frame: Option<Instant> = None;
    let mut revision = 0;
    let mut paused = false;
    while !inner.stop.load(Ordering::SeqCst) {
        let started = Instant::now();
        let mut reconfigured = false;
        while let Ok(edit) = edits.try_recv() {
            reconfigured |= apply_edit(&mut sim, edit, inner, &mut paused);
        }
        if reconfigured || sim.is_stale() {
            if let Err(e) = sim.refresh() {
                log::error!("basis refresh failed: {e}");
                inner.broadcast(
                    &ServerMessage::Error {
                        seq: None,
                        reason: format!("basis refresh failed: {e}"),
                    },
                    false,
                );
            }
            revision += 1;
            let line = ServerMessage::Config(config_message(&sim, revision, paused)).to_line();
            let mut shared = inner.shared.lock().unwrap();
            shared.config = line.clone();
            for c in &shared.clients {
                c.outbox.push(line.clone(), false, 0);
            }
        }
        if paused {
            std::thread::sleep(Duration::from_millis(5));
            continue;
        }
        if let Err(e) = sim.step() {
            log::error!("simulation step failed: {e}; pausing");
            paused = true;
            inner.broadcast(
                &ServerMessage::Error {
                    seq: None,
                    reason: format!("simulation paused: {e}"),
                },
                false,
            );
            continue;
        }
        inner.step.store(sim.state().step, Ordering::SeqCst);
        if last_frame.map_or(true, |t| t.elapsed() >= frame_interval) {
            last_frame = Some(Instant::now());
            let f = sim.frame();
            inner.broadcast(
                &ServerMessage::Frame(FrameMessage {
                    revision,
                    step: f.step,
                    alpha: f.alpha,
                    z: f.z,
                    positions: f.positions,
                }),
                true,
            );
            inner.frames.fetch_add(1, Ordering::SeqCst);
        }
        if let Some(dt) = step_interval {
            if let Some(rest) = dt.checked_sub(started.elapsed()) {
                std::thread::sleep(rest);
            }
        }
    }
    sim
}

/// Apply one edit; returns whether the layout changed (config must be resent).
fn apply_edit(sim: &mut Simulator, edit: Edit, inner: &Inner, paused: &mut bool) -> bool {
    let seq = edit.msg.seq();
    let kind = edit.msg.kind();
    let next = sim.state().step + 1;
    let backup = matches!(edit.msg, ClientMessage::SetCrease { .. } | ClientMessage::SetAlpha { .. }).then(|| sim.clone());
    let result: Result<(u64, Option<String>, bool), String> = match edit.msg {
        ClientMessage::Hello { .. } => Err("duplicate hello".into()),
        ClientMessage::SetAlpha { alpha, .. } => sim.set_alpha(alpha).map(|_| (next, None, true)).map_err(|e| e.to_string()),
        ClientMessage::SetCrease { vertices, .. } => sim
            .set_crease(&vertices)
            .map(|out| (next, out.then(|| "out-of-family".to_string()), true))
            .map_err(|e| e.to_string()),
        ClientMessage::MoveHandle { handle, position, .. } => sim
            .move_handle(handle, position)
            .map(|_| (next, None, false))
            .map_err(|e| e.to_string()),
        ClientMessage::Pause { .. } => {
            *paused = true;
            Ok((next, None, false))
        }
        ClientMessage::Resume { .. } => {
            *paused = false;
            Ok((next, None, false))
        }
        ClientMessage::Reset { .. } => {
            sim.reset();
            Ok((1, None, true))
        }
    };
    let result = result.and_then(|ok| {
        // refresh now so a failing basis build rejects the edit instead of stalling the loop
        if sim.is_stale() {
            sim.refresh().map_err(|e| e.to_string())?;
        }
        Ok(ok)
    });
    match result {
        Ok((step, warning, reconfigure)) => {
            inner.send_to(
                edit.client,
                &ServerMessage::Ack {
                    seq,
                    edit: kind.into(),
                    step,
                    warning,
                },
            );
            reconfigure
        }
        Err(reason) => {
            if let Some(b) = backup {
                *sim = b;
            }
            inner.send_to(edit.client, &ServerMessage::Error { seq, reason });
            false
        }
    }
}
