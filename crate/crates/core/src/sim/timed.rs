//! Clock-level simulation: periodic arrivals, stop-and-wait sends and timeouts
//! on a virtual nanosecond clock.
//!
//! Arrivals due at or before the current instant are admitted (or blocked when
//! the buffer is full) before any send result is applied, so a message that
//! completes at instant `τ` still occupies its slot for arrivals due at `τ`.

use super::config::{SimConfig, SimMode};
use super::embedded::RecordSink;
use super::record::ObservationRecord;
use super::report::{Collector, SimReport};
use super::rng::stream_rng;
use super::source::{BernoulliSource, OutcomeSource};
use crate::error::SimError;

const NANOS: f64 = 1e9;

struct Clock {
    now: u64,
    next_arrival: u64,
    interval: u64,
}

#[derive(Default)]
struct EpochLog {
    index: u64,
    state_before: usize,
    attempts: Vec<bool>,
    admitted: usize,
    blocked: usize,
}

pub(crate) fn timed_collector(
    config: &SimConfig,
    source: &mut impl OutcomeSource,
    mut sink: Option<RecordSink<'_>>,
) -> Result<Collector, SimError> {
    config.validate()?;
    let params = &config.params;
    let timing = params.timing().ok_or_else(|| {
        SimError::InvalidConfig("timed mode needs an arrival interval and a timeout".into())
    })?;
    timing.arrivals_per_timeout()?;

    let capacity = params.capacity();
    let interval = (timing.arrival_interval * NANOS).round().max(1.0) as u64;
    let timeout = interval * params.m() as u64;
    let service = (config.service_time * NANOS).round() as u64;

    let mut clock = Clock {
        now: 0,
        next_arrival: 0,
        interval,
    };
    let mut collector = Collector::new(config);
    let mut len = 0usize;
    let mut current: Option<EpochLog> = None;
    let mut completed = 0u64;

    let ingest = |clock: &mut Clock, len: &mut usize, log: &mut Option<EpochLog>| {
        while clock.next_arrival <= clock.now {
            let admitted = *len < capacity;
            if admitted {
                *len += 1;
            }
            if let Some(log) = log.as_mut() {
                if admitted {
                    log.admitted += 1;
                } else {
                    log.blocked += 1;
                }
            }
            clock.next_arrival += clock.interval;
        }
    };

    while completed < config.n_observations {
        if len == 0 {
            clock.now = clock.next_arrival;
            ingest(&mut clock, &mut len, &mut current);
        } else {
            let ok = source.next_delivered()?;
            if let Some(log) = current.as_mut() {
                log.attempts.push(ok);
            }
            if ok {
                clock.now += service;
                ingest(&mut clock, &mut len, &mut current);
                len -= 1;
                continue;
            }
            clock.now += timeout;
            ingest(&mut clock, &mut len, &mut current);
        }

        // observation: the buffer holds `len` messages
        if let Some(done) = current.take() {
            completed += 1;
            let timed_out = done.attempts.iter().any(|&ok| !ok);
            if done.index > config.warmup_observations {
                collector.push(done.state_before, len, done.blocked, timed_out);
            }
            if let Some(sink) = sink.as_deref_mut() {
                sink(&ObservationRecord {
                    index: done.index,
                    state_before: done.state_before,
                    attempts: done.attempts,
                    arrivals_admitted: done.admitted,
                    arrivals_blocked: done.blocked,
                    state_after: len,
                    blocked_ids: Vec::new(),
                });
            }
        }
        current = Some(EpochLog {
            index: completed + 1,
            state_before: len,
            ..EpochLog::default()
        });
    }
    collector.set_elapsed(clock.now as f64 / NANOS);
    Ok(collector)
}

fn check_mode(config: &SimConfig) -> Result<(), SimError> {
    if config.mode != SimMode::Timed {
        return Err(SimError::InvalidConfig(format!(
            "expected Timed mode, config has {:?}",
            config.mode
        )));
    }
    Ok(())
}

pub(crate) fn timed_bernoulli(
    config: &SimConfig,
    sink: Option<RecordSink<'_>>,
) -> Result<Collector, SimError> {
    let mut source =
        BernoulliSource::new(stream_rng(config.seed, config.stream), config.params.p());
    timed_collector(config, &mut source, sink)
}

/// Virtual-clock run with Bernoulli(p) losses.
pub fn run_timed(config: &SimConfig) -> Result<SimReport, SimError> {
    check_mode(config)?;
    Ok(timed_bernoulli(config, None)?.finish())
}

pub fn run_timed_logged(config: &SimConfig, sink: RecordSink<'_>) -> Result<SimReport, SimError> {
    check_mode(config)?;
    Ok(timed_bernoulli(config, Some(sink))?.finish())
}
