//! End-to-end testbed runs and the log checks applied to them.

use std::sync::Arc;
use std::time::Duration;

use restbuf_core::sim::{run_timed, SimConfig, SimReport};
use restbuf_core::ModelParams;
use serde::Serialize;

use restbuf_core::sim::stats::Estimate;

use crate::client::{
    client_run, measure_drain_time, median, BatchSums, ClientConfig, TestbedReport,
};
use crate::config::TestbedConfig;
use crate::error::TestbedError;
use crate::fault::{FaultSchedule, InjectionSide};
use crate::server::{serve, ServerConfig, ServerLog};

pub const DRAIN_REPETITIONS: usize = 5;

/// Result of the log checks, with a line per violation.
#[derive(Debug, Clone, Default, Serialize)]
pub struct InvariantReport {
    pub fifo: bool,
    pub buffer_cap: bool,
    pub at_least_once: bool,
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.fifo && self.buffer_cap && self.at_least_once
    }
}

/// Checks head-of-line order, the capacity bound and delivery accounting.
pub fn check_invariants(report: &TestbedReport, server: &ServerLog) -> InvariantReport {
    let mut violations = Vec::new();

    let server_acks = server.acked_ids();
    let increasing = server_acks.windows(2).all(|w| w[0] < w[1]);
    if !increasing {
        violations.push("server acknowledged ids out of order or twice".to_string());
    }
    let prefix = report.acked_ids.len() <= report.admitted_ids.len()
        && report.acked_ids[..] == report.admitted_ids[..report.acked_ids.len()];
    if !prefix {
        violations.push("client acknowledgements skip an admitted id".to_string());
    }
    if !server_acks.starts_with(&report.acked_ids) {
        let at = server_acks
            .iter()
            .zip(&report.acked_ids)
            .position(|(a, b)| a != b)
            .unwrap_or(server_acks.len().min(report.acked_ids.len()));
        violations.push(format!(
            "client acknowledgements differ from the server's at position {at}: server {:?}, client {:?}",
            server_acks.get(at),
            report.acked_ids.get(at)
        ));
    }
    let fifo = increasing && prefix && server_acks.starts_with(&report.acked_ids);

    let logged_blocked: usize = report.observations.iter().map(|o| o.blocked).sum();
    let over_cap = report
        .observations
        .iter()
        .any(|o| o.state > report.capacity);
    if report.max_buffer_len > report.capacity || over_cap {
        violations.push(format!(
            "buffer reached {} with capacity {}",
            report.max_buffer_len, report.capacity
        ));
    }
    if logged_blocked > report.blocked_ids.len() {
        violations.push(format!(
            "observations count {logged_blocked} blocked arrivals, client saw {}",
            report.blocked_ids.len()
        ));
    }
    let total = report.admitted_ids.len() + report.blocked_ids.len();
    let mut all: Vec<u64> = report
        .admitted_ids
        .iter()
        .chain(&report.blocked_ids)
        .copied()
        .collect();
    all.sort_unstable();
    let contiguous = all.iter().copied().eq(1..=total as u64);
    if !contiguous {
        violations.push("arrival ids are neither admitted nor blocked exactly once".to_string());
    }
    let buffer_cap = report.max_buffer_len <= report.capacity
        && !over_cap
        && logged_blocked <= report.blocked_ids.len()
        && contiguous;

    let accounted = report
        .acked_ids
        .iter()
        .chain(&report.remaining_ids)
        .eq(report.admitted_ids.iter());
    if !accounted {
        violations.push("admitted ids are not acked or still queued, in order".to_string());
    }

    InvariantReport {
        fifo,
        buffer_cap,
        at_least_once: accounted,
        violations,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub p: f64,
    pub m: u32,
    pub k: u32,
    pub drain_samples: Vec<Duration>,
    pub report: TestbedReport,
    pub server_log: ServerLog,
    pub invariants: InvariantReport,
}

/// Times `n` back-to-back messages against a throwaway loss-free server.
pub fn drain_check(n: usize, frame_size: usize) -> Result<Vec<Duration>, TestbedError> {
    let server = serve(
        "127.0.0.1:0",
        ServerConfig {
            frame_size,
            ..ServerConfig::default()
        },
    )?;
    let samples = measure_drain_time(server.local_addr(), n, DRAIN_REPETITIONS, frame_size);
    server.shutdown();
    samples
}

/// Independent client/server pairs run side by side, pooled.
#[derive(Debug, Clone, Serialize)]
pub struct PooledOutcome {
    pub runs: Vec<ExperimentOutcome>,
    pub size: Estimate,
    pub blocked: Estimate,
    pub n_used: u64,
}

impl PooledOutcome {
    pub fn invariants_hold(&self) -> bool {
        self.runs.iter().all(|r| r.invariants.all_hold())
    }

    /// Drain samples of the first run, which all runs share the host with.
    pub fn drain_samples(&self) -> &[Duration] {
        &self.runs[0].drain_samples
    }
}

/// Splits `config.observations` over `replications` concurrent pairs.
///
/// Each pair gets its own loss vector (seed `seed + r`) and discards its own
/// warmup; the estimates pool the batches of every pair. With a loss-vector
/// file every pair replays the same file.
pub fn run_pooled(
    config: &TestbedConfig,
    replications: usize,
) -> Result<PooledOutcome, TestbedError> {
    if replications == 0 {
        return Err(TestbedError::Config("need at least one replication".into()));
    }
    let per_run = config.observations.div_ceil(replications as u64);
    let handles: Vec<_> = (0..replications)
        .map(|r| {
            let mut cfg = config.clone();
            cfg.observations = per_run + config.warmup;
            cfg.seed = config.seed.wrapping_add(r as u64);
            std::thread::spawn(move || run_experiment(&cfg))
        })
        .collect();
    let runs = handles
        .into_iter()
        .map(|h| h.join().expect("testbed run panicked"))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sums = BatchSums::default();
    for run in &runs {
        sums.append(run.report.batch_sums());
    }
    Ok(PooledOutcome {
        size: sums.size(),
        blocked: sums.blocked(),
        n_used: sums.counts.iter().sum::<f64>() as u64,
        runs,
    })
}

/// Runs one configured experiment on loopback.
///
/// A full buffer must drain in less than one arrival interval first, otherwise
/// the run would not match the model's instantaneous-drain assumption.
pub fn run_experiment(config: &TestbedConfig) -> Result<ExperimentOutcome, TestbedError> {
    let vector = config.loss_vector()?;
    let params = config.params(&vector)?;
    let interval = Duration::from_secs_f64(config.t_scaled);
    let timeout = config.timeout();

    let drain_samples = drain_check(params.capacity(), config.frame_size)?;
    let took = median(&drain_samples).unwrap_or_default();
    if took >= interval {
        return Err(TestbedError::SlowDrain {
            messages: params.capacity(),
            took,
            interval,
        });
    }

    let schedule = match config.pause() {
        Some(pause) => FaultSchedule::with_pause(vector, pause),
        None => FaultSchedule::for_timeout(vector, timeout),
    };
    schedule.validate(timeout)?;

    let mut client = ClientConfig::new(params, config.observations);
    client.warmup_observations = config.warmup;
    client.injection = config.injection_side;
    client.frame_size = config.frame_size;
    client.keep_alive = config.keep_alive;

    let server_config = ServerConfig {
        frame_size: config.frame_size,
        ..ServerConfig::default()
    };
    let server_config = match config.injection_side {
        InjectionSide::Server => ServerConfig {
            schedule: Some(Arc::new(schedule)),
            ..server_config
        },
        InjectionSide::Client => {
            client.client_schedule = Some(schedule);
            server_config
        }
    };

    let server = serve("127.0.0.1:0", server_config)?;
    let report = client_run(server.local_addr(), &client);
    let server_log = server.shutdown();
    let report = report?;
    let invariants = check_invariants(&report, &server_log);

    Ok(ExperimentOutcome {
        p: params.p(),
        m: params.m(),
        k: params.k(),
        drain_samples,
        report,
        server_log,
        invariants,
    })
}

/// Timed simulation with the same parameters, for side-by-side comparison.
pub fn model_reference(
    params: ModelParams,
    observations: u64,
    warmup: u64,
    seed: u64,
) -> Result<SimReport, TestbedError> {
    let config = SimConfig::new(params, observations, seed)
        .timed()
        .with_warmup(warmup);
    Ok(run_timed(&config)?)
}
