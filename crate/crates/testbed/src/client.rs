//! Stop-and-wait client with a periodic arrival clock and a bounded buffer.
//!
//! Arrival `j` is due at `start + j·t`. The send loop admits arrivals by due
//! time, up to the current instant or the window boundary whichever is
//! earlier, before it applies a send result. The buffer seen at an
//! observation then does not depend on thread scheduling or on the coarse
//! socket timer. An observation is
//! taken after each timeout and when the first arrival lands in an empty
//! buffer.

use std::collections::HashMap;
use std::net::{SocketAddr, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

use restbuf_core::sim::stats::{batch_estimate, batch_of, Estimate};
use restbuf_core::ModelParams;
use serde::Serialize;

use crate::buffer::ClientBuffer;
use crate::error::TestbedError;
use crate::fault::{FaultSchedule, InjectionSide};
use crate::http::{self, Kind, ReadError};
use crate::message::{FrameBuilder, Message, DEFAULT_FRAME_SIZE};

#[derive(Debug)]
pub struct ClientConfig {
    /// Loss probability is informational here; timing must be set.
    pub params: ModelParams,
    pub n_observations: u64,
    pub warmup_observations: u64,
    pub injection: InjectionSide,
    /// Consulted before each send when injecting on the client side.
    pub client_schedule: Option<FaultSchedule>,
    pub frame_size: usize,
    pub keep_alive: bool,
    pub batches: usize,
}

impl ClientConfig {
    pub fn new(params: ModelParams, n_observations: u64) -> Self {
        Self {
            params,
            n_observations,
            warmup_observations: 0,
            injection: InjectionSide::Server,
            client_schedule: None,
            frame_size: DEFAULT_FRAME_SIZE,
            keep_alive: false,
            batches: 30,
        }
    }

    fn intervals(&self) -> Result<(Duration, Duration), TestbedError> {
        let timing = self
            .params
            .timing()
            .ok_or_else(|| TestbedError::Config("client needs t and T_o".into()))?;
        let m = timing.arrivals_per_timeout()?;
        let t = Duration::from_secs_f64(timing.arrival_interval);
        Ok((t, t * m))
    }

    fn validate(&self) -> Result<(), TestbedError> {
        if self.n_observations == 0 || self.warmup_observations >= self.n_observations {
            return Err(TestbedError::Config(format!(
                "need 0 <= warmup ({}) < observations ({})",
                self.warmup_observations, self.n_observations
            )));
        }
        if self.batches < 2 {
            return Err(TestbedError::Config("need at least two batches".into()));
        }
        if self.injection == InjectionSide::Client {
            let (_, timeout) = self.intervals()?;
            self.client_schedule
                .as_ref()
                .ok_or_else(|| {
                    TestbedError::Config("client-side injection needs a schedule".into())
                })?
                .validate(timeout)?;
        }
        Ok(())
    }
}

/// Buffer state at one observation and what happened until the next one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestbedObservation {
    pub index: u64,
    pub state: usize,
    pub attempts: u32,
    pub successes: u32,
    pub timed_out: bool,
    pub admitted: usize,
    pub blocked: usize,
    /// Milliseconds since the client started.
    pub at_ms: f64,
}

/// Time taken to empty the buffer without a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DrainSample {
    pub messages: usize,
    pub duration: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestbedReport {
    pub s_hat: f64,
    pub s_ci95: f64,
    pub b_hat: f64,
    pub b_ci95: f64,
    pub n_used: u64,
    pub warmup: u64,
    pub batches: usize,
    pub observations: Vec<TestbedObservation>,
    pub attempts: u64,
    pub timeouts: u64,
    /// Non-200 answers and connection failures.
    pub rejected: u64,
    /// Acknowledgements for an id other than the head.
    pub stale_responses: u64,
    pub wall_clock: Duration,
    pub drain_samples: Vec<DrainSample>,
    pub capacity: usize,
    pub max_buffer_len: usize,
    pub admitted_ids: Vec<u64>,
    pub blocked_ids: Vec<u64>,
    pub acked_ids: Vec<u64>,
    pub remaining_ids: Vec<u64>,
}

impl TestbedReport {
    pub fn size(&self) -> Estimate {
        Estimate {
            mean: self.s_hat,
            ci95: self.s_ci95,
        }
    }

    pub fn blocked(&self) -> Estimate {
        Estimate {
            mean: self.b_hat,
            ci95: self.b_ci95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AttemptOutcome {
    Delivered,
    TimedOut,
    Rejected,
    Stale,
}

fn sleep_until(at: Instant) {
    let now = Instant::now();
    if at > now {
        thread::sleep(at - now);
    }
}

fn attempt(
    addr: SocketAddr,
    wire: &[u8],
    id: u64,
    deadline: Instant,
    conn: &mut Option<TcpStream>,
    keep_alive: bool,
) -> AttemptOutcome {
    let remaining = deadline.saturating_duration_since(Instant::now());
    if remaining.is_zero() {
        return AttemptOutcome::TimedOut;
    }
    let mut stream = match conn.take() {
        Some(s) if keep_alive => s,
        _ => match TcpStream::connect_timeout(&addr, remaining) {
            Ok(s) => s,
            Err(e) if e.kind() == std::io::ErrorKind::TimedOut => return AttemptOutcome::TimedOut,
            Err(_) => return AttemptOutcome::Rejected,
        },
    };
    let _ = stream.set_nodelay(true);
    if stream.set_write_timeout(Some(remaining)).is_err()
        || std::io::Write::write_all(&mut stream, wire).is_err()
    {
        return AttemptOutcome::Rejected;
    }
    let mut buf = Vec::new();
    let total = match http::read_message(&mut stream, &mut buf, Kind::Response, deadline) {
        Ok(total) => total,
        Err(ReadError::Timeout) => return AttemptOutcome::TimedOut,
        Err(_) => return AttemptOutcome::Rejected,
    };
    // the socket timer is coarse, so a held-back response can slip in late
    if Instant::now() > deadline {
        return AttemptOutcome::TimedOut;
    }
    let Ok(resp) = http::parse_response(&buf[..total]) else {
        return AttemptOutcome::Rejected;
    };
    if resp.status != 200 {
        return AttemptOutcome::Rejected;
    }
    let acked = serde_json::from_slice::<serde_json::Value>(&resp.body)
        .ok()
        .and_then(|v| v.get("ack").and_then(|a| a.as_u64()));
    if acked != Some(id) {
        return AttemptOutcome::Stale;
    }
    if keep_alive {
        *conn = Some(stream);
    }
    AttemptOutcome::Delivered
}

struct Epoch {
    index: u64,
    state: usize,
    started: Instant,
    /// Shared by every attempt in the window.
    deadline: Instant,
    attempts: u32,
    successes: u32,
    timed_out: bool,
    admitted: usize,
    blocked: usize,
}

struct Arrivals {
    start: Instant,
    interval: Duration,
    next: u64,
    frames: FrameBuilder,
}

impl Arrivals {
    fn due(&self, j: u64) -> Instant {
        self.start + self.interval.mul_f64(j as f64)
    }
}

/// Admits or blocks every arrival due by `now`.
fn ingest(
    now: Instant,
    arrivals: &mut Arrivals,
    buffer: &mut ClientBuffer,
    wires: &mut HashMap<u64, Vec<u8>>,
    report: &mut TestbedReport,
    epoch: &mut Option<Epoch>,
) -> Result<(), TestbedError> {
    while arrivals.due(arrivals.next) <= now {
        let id = arrivals.next + 1;
        arrivals.next += 1;
        let (message, wire): (Message, Vec<u8>) = arrivals.frames.build(id)?;
        match buffer.push(message) {
            Ok(()) => {
                wires.insert(id, wire);
                report.admitted_ids.push(id);
                if let Some(e) = epoch.as_mut() {
                    e.admitted += 1;
                }
            }
            Err(_) => {
                report.blocked_ids.push(id);
                if let Some(e) = epoch.as_mut() {
                    e.blocked += 1;
                }
            }
        }
        report.max_buffer_len = report.max_buffer_len.max(buffer.len());
    }
    Ok(())
}

/// Runs the client against `server` until `n_observations` observations are complete.
pub fn client_run(
    server: SocketAddr,
    config: &ClientConfig,
) -> Result<TestbedReport, TestbedError> {
    config.validate()?;
    let (interval, timeout) = config.intervals()?;
    let capacity = config.params.capacity();

    TcpStream::connect_timeout(&server, Duration::from_secs(2)).map_err(|source| {
        TestbedError::Unreachable {
            addr: server,
            source,
        }
    })?;
    let frames =
        FrameBuilder::new(server.to_string(), config.frame_size).keep_alive(config.keep_alive);
    frames.build(u64::from(u32::MAX))?;

    let start = Instant::now();
    let mut arrivals = Arrivals {
        start,
        interval,
        next: 0,
        frames,
    };
    let mut buffer = ClientBuffer::new(capacity);
    let mut wires: HashMap<u64, Vec<u8>> = Default::default();
    let mut conn: Option<TcpStream> = None;
    let mut report = TestbedReport {
        s_hat: 0.0,
        s_ci95: 0.0,
        b_hat: 0.0,
        b_ci95: 0.0,
        n_used: 0,
        warmup: config.warmup_observations,
        batches: config.batches,
        observations: Vec::with_capacity(config.n_observations as usize),
        attempts: 0,
        timeouts: 0,
        rejected: 0,
        stale_responses: 0,
        wall_clock: Duration::ZERO,
        drain_samples: Vec::new(),
        capacity,
        max_buffer_len: 0,
        admitted_ids: Vec::new(),
        blocked_ids: Vec::new(),
        acked_ids: Vec::new(),
        remaining_ids: Vec::new(),
    };
    let mut current: Option<Epoch> = None;

    // Timeout windows are laid on the ideal arrival grid, so scheduling
    // jitter does not accumulate into an extra arrival per window.
    let mut anchor;
    while (report.observations.len() as u64) < config.n_observations {
        if buffer.is_empty() {
            let due = arrivals.due(arrivals.next);
            sleep_until(due);
            ingest(
                due,
                &mut arrivals,
                &mut buffer,
                &mut wires,
                &mut report,
                &mut current,
            )?;
            anchor = due;
        } else {
            let head = buffer.head().expect("non-empty").id;
            let epoch = current
                .as_mut()
                .expect("an epoch is open while messages wait");
            let deadline = epoch.deadline;
            epoch.attempts += 1;
            report.attempts += 1;

            let lost_here = config.injection == InjectionSide::Client
                && config
                    .client_schedule
                    .as_ref()
                    .is_some_and(FaultSchedule::next_is_loss);
            let outcome = if lost_here {
                conn = None;
                sleep_until(deadline);
                AttemptOutcome::TimedOut
            } else {
                attempt(
                    server,
                    &wires[&head],
                    head,
                    deadline,
                    &mut conn,
                    config.keep_alive,
                )
            };

            if outcome == AttemptOutcome::Delivered {
                ingest(
                    Instant::now().min(deadline),
                    &mut arrivals,
                    &mut buffer,
                    &mut wires,
                    &mut report,
                    &mut current,
                )?;
                buffer.acknowledge(head);
                wires.remove(&head);
                report.acked_ids.push(head);
                if let Some(e) = current.as_mut() {
                    e.successes += 1;
                    if buffer.is_empty() {
                        report.drain_samples.push(DrainSample {
                            messages: e.successes as usize,
                            duration: Instant::now() - e.started,
                        });
                    }
                }
                continue;
            }

            match outcome {
                AttemptOutcome::TimedOut => report.timeouts += 1,
                AttemptOutcome::Stale => report.stale_responses += 1,
                _ => report.rejected += 1,
            }
            conn = None;
            if let Some(e) = current.as_mut() {
                e.timed_out = true;
            }
            // early failures still cost a full timeout window
            sleep_until(deadline);
            ingest(
                deadline,
                &mut arrivals,
                &mut buffer,
                &mut wires,
                &mut report,
                &mut current,
            )?;
            anchor = deadline;
        }

        let now = Instant::now();
        if let Some(done) = current.take() {
            report.observations.push(TestbedObservation {
                index: done.index,
                state: done.state,
                attempts: done.attempts,
                successes: done.successes,
                timed_out: done.timed_out,
                admitted: done.admitted,
                blocked: done.blocked,
                at_ms: (done.started - start).as_secs_f64() * 1e3,
            });
        }
        current = Some(Epoch {
            index: report.observations.len() as u64 + 1,
            state: buffer.len(),
            started: now,
            deadline: anchor + timeout,
            attempts: 0,
            successes: 0,
            timed_out: false,
            admitted: 0,
            blocked: 0,
        });
    }

    report.wall_clock = start.elapsed();
    report.remaining_ids = buffer.ids().collect();
    summarize(&mut report);
    Ok(report)
}

/// Per-batch sums of state and blocked count over the used observations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchSums {
    pub counts: Vec<f64>,
    pub sizes: Vec<f64>,
    pub blocked: Vec<f64>,
}

impl BatchSums {
    pub fn append(&mut self, other: BatchSums) {
        self.counts.extend(other.counts);
        self.sizes.extend(other.sizes);
        self.blocked.extend(other.blocked);
    }

    pub fn size(&self) -> Estimate {
        batch_estimate(&self.sizes, &self.counts)
    }

    pub fn blocked(&self) -> Estimate {
        batch_estimate(&self.blocked, &self.counts)
    }
}

impl TestbedReport {
    /// Batches over the observations after warmup.
    pub fn batch_sums(&self) -> BatchSums {
        let used = &self.observations[(self.warmup as usize).min(self.observations.len())..];
        let n = used.len() as u64;
        let batches = self.batches.min(used.len()).max(1);
        let mut sums = BatchSums {
            counts: vec![0.0; batches],
            sizes: vec![0.0; batches],
            blocked: vec![0.0; batches],
        };
        for (i, obs) in used.iter().enumerate() {
            let b = batch_of(i as u64, n, batches);
            sums.counts[b] += 1.0;
            sums.sizes[b] += obs.state as f64;
            sums.blocked[b] += obs.blocked as f64;
        }
        sums
    }
}

fn summarize(report: &mut TestbedReport) {
    let sums = report.batch_sums();
    let (s, b) = (sums.size(), sums.blocked());
    report.s_hat = s.mean;
    report.s_ci95 = s.ci95;
    report.b_hat = b.mean;
    report.b_ci95 = b.ci95;
    report.n_used = sums.counts.iter().sum::<f64>() as u64;
}

/// Sends `n_messages` back to back over a loss-free path and times the whole drain.
///
/// Returns one sample per repetition.
pub fn measure_drain_time(
    server: SocketAddr,
    n_messages: usize,
    repetitions: usize,
    frame_size: usize,
) -> Result<Vec<Duration>, TestbedError> {
    let frames = FrameBuilder::new(server.to_string(), frame_size);
    let wires = (1..=n_messages as u64)
        .map(|id| frames.build(id).map(|(_, wire)| wire))
        .collect::<Result<Vec<_>, _>>()?;
    let mut samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let started = Instant::now();
        for (i, wire) in wires.iter().enumerate() {
            let deadline = Instant::now() + Duration::from_secs(5);
            let outcome = attempt(server, wire, i as u64 + 1, deadline, &mut None, false);
            if outcome != AttemptOutcome::Delivered {
                return Err(TestbedError::Config(format!(
                    "drain measurement needs a loss-free server, message {} got {outcome:?}",
                    i + 1
                )));
            }
        }
        samples.push(started.elapsed());
    }
    Ok(samples)
}

/// Median of the samples, `None` when empty.
pub fn median(samples: &[Duration]) -> Option<Duration> {
    let mut sorted = samples.to_vec();
    sorted.sort();
    sorted.get(sorted.len() / 2).copied()
}
