//! Loopback acknowledgement server with server-side link-loss emulation.

use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::fault::FaultSchedule;
use crate::http::{self, Kind, ReadError};
use crate::message::{API_PATH, DEFAULT_FRAME_SIZE};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Expected request size; other sizes are answered but flagged.
    pub frame_size: usize,
    /// Server-side loss emulation, one bit per request.
    pub schedule: Option<Arc<FaultSchedule>>,
    /// How long an idle connection may take to deliver its request.
    pub idle_timeout: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            frame_size: DEFAULT_FRAME_SIZE,
            schedule: None,
            idle_timeout: Duration::from_secs(30),
        }
    }
}

/// What the server did with one request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ServerEvent {
    pub id: Option<u64>,
    pub status: u16,
    /// Response held back for the fault pause.
    pub faulted: bool,
    /// Request size differed from the configured frame size.
    pub frame_mismatch: bool,
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct ServerLog {
    /// In order of dispatch decision.
    pub events: Vec<ServerEvent>,
    /// Held-back responses written after their pause (the client has gone by then).
    pub late_responses: u64,
}

impl ServerLog {
    /// Ids answered promptly with 200, in dispatch order.
    pub fn acked_ids(&self) -> Vec<u64> {
        self.events
            .iter()
            .filter(|e| e.status == 200 && !e.faulted)
            .filter_map(|e| e.id)
            .collect()
    }

    pub fn faulted(&self) -> usize {
        self.events.iter().filter(|e| e.faulted).count()
    }

    pub fn rejected(&self) -> usize {
        self.events.iter().filter(|e| e.status != 200).count()
    }

    pub fn frame_mismatches(&self) -> usize {
        self.events.iter().filter(|e| e.frame_mismatch).count()
    }
}

/// Running server; dropping it without [`ServerHandle::shutdown`] leaves it running.
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    log: Arc<Mutex<ServerLog>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Copy of the log so far.
    pub fn log(&self) -> ServerLog {
        self.log.lock().expect("server log poisoned").clone()
    }

    /// Stops accepting connections and returns the log.
    pub fn shutdown(mut self) -> ServerLog {
        self.stop.store(true, Ordering::SeqCst);
        // unblock accept()
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_millis(200));
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
        self.log()
    }
}

/// Binds and starts serving `POST /api/sensors` on a background thread.
///
/// Each connection is handled on its own thread, so a held-back response does
/// not delay the client's retransmission on a fresh connection.
pub fn serve(addr: impl ToSocketAddrs, config: ServerConfig) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let log = Arc::new(Mutex::new(ServerLog::default()));
    let config = Arc::new(config);

    let thread = {
        let (stop, log) = (stop.clone(), log.clone());
        thread::Builder::new()
            .name("restbuf-server".into())
            .spawn(move || {
                for conn in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = conn else { continue };
                    let (config, log) = (config.clone(), log.clone());
                    let _ = thread::Builder::new()
                        .name("restbuf-conn".into())
                        .spawn(move || handle_connection(stream, &config, &log));
                }
            })?
    };

    Ok(ServerHandle {
        addr: local,
        stop,
        log,
        thread: Some(thread),
    })
}

fn record(log: &Mutex<ServerLog>, event: ServerEvent) {
    log.lock().expect("server log poisoned").events.push(event);
}

fn handle_connection(mut stream: TcpStream, config: &ServerConfig, log: &Mutex<ServerLog>) {
    let _ = stream.set_nodelay(true);
    let mut buf = Vec::new();
    loop {
        let deadline = Instant::now() + config.idle_timeout;
        let total = match http::read_message(&mut stream, &mut buf, Kind::Request, deadline) {
            Ok(total) => total,
            Err(ReadError::Malformed(reason)) => {
                record(
                    log,
                    ServerEvent {
                        id: None,
                        status: 400,
                        faulted: false,
                        frame_mismatch: true,
                    },
                );
                let body = serde_json::json!({ "error": reason }).to_string();
                let _ =
                    http::write_response(&mut stream, 400, "Bad Request", body.as_bytes(), false);
                return;
            }
            Err(_) => return,
        };
        let raw: Vec<u8> = buf.drain(..total).collect();
        let Ok(req) = http::parse_request(&raw) else {
            return;
        };
        let frame_mismatch = raw.len() != config.frame_size;

        let id = match (req.method.as_str(), req.path.as_str(), req.id) {
            ("POST", API_PATH, Some(id)) => id,
            _ => {
                record(
                    log,
                    ServerEvent {
                        id: req.id,
                        status: 400,
                        faulted: false,
                        frame_mismatch,
                    },
                );
                let _ = http::write_response(&mut stream, 400, "Bad Request", b"{}", false);
                return;
            }
        };

        let faulted = config.schedule.as_ref().is_some_and(|s| s.next_is_loss());
        record(
            log,
            ServerEvent {
                id: Some(id),
                status: 200,
                faulted,
                frame_mismatch,
            },
        );
        if let (true, Some(schedule)) = (faulted, config.schedule.as_ref()) {
            thread::sleep(schedule.pause());
            log.lock().expect("server log poisoned").late_responses += 1;
        }

        let body = serde_json::json!({ "ack": id }).to_string();
        let keep = req.keep_alive && !faulted;
        if http::write_response(&mut stream, 200, "OK", body.as_bytes(), keep).is_err() || !keep {
            return;
        }
    }
}
