use super::config::{SimConfig, SimMode};
use super::loss::LossVector;
use super::record::ObservationRecord;
use super::report::{Collector, SimReport};
use super::rng::stream_rng;
use super::source::{BernoulliSource, OutcomeSource, VectorMode, VectorSource};
use crate::error::SimError;

pub type RecordSink<'a> = &'a mut dyn FnMut(&ObservationRecord);

/// Result of one epoch of the observation process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Epoch {
    pub successes: usize,
    pub failed: bool,
    pub next_state: usize,
    pub admitted: usize,
    pub blocked: usize,
}

/// Sends buffered messages head first until one fails or the buffer drains.
pub(crate) fn run_epoch(
    state: usize,
    m: usize,
    capacity: usize,
    source: &mut impl OutcomeSource,
    mut attempts: Option<&mut Vec<bool>>,
) -> Result<Epoch, SimError> {
    let mut successes = 0;
    while successes < state {
        let ok = source.next_delivered()?;
        if let Some(log) = attempts.as_deref_mut() {
            log.push(ok);
        }
        if !ok {
            let wanted = state - successes + m;
            let next_state = wanted.min(capacity);
            let blocked = wanted - next_state;
            return Ok(Epoch {
                successes,
                failed: true,
                next_state,
                admitted: m - blocked,
                blocked,
            });
        }
        successes += 1;
    }
    Ok(Epoch {
        successes,
        failed: false,
        next_state: 1,
        admitted: 1,
        blocked: 0,
    })
}

pub(crate) fn run_chain(
    config: &SimConfig,
    source: &mut impl OutcomeSource,
    mut sink: Option<RecordSink<'_>>,
) -> Result<Collector, SimError> {
    config.validate()?;
    let params = &config.params;
    let (m, capacity) = (params.arrivals(), params.capacity());
    let mut collector = Collector::new(config);
    let mut attempts = Vec::new();
    let mut state = 1;

    for index in 1..=config.n_observations {
        attempts.clear();
        let log = sink.is_some().then_some(&mut attempts);
        let epoch = run_epoch(state, m, capacity, source, log)?;
        if index > config.warmup_observations {
            collector.push(state, epoch.next_state, epoch.blocked, epoch.failed);
        }
        if let Some(sink) = sink.as_deref_mut() {
            sink(&ObservationRecord {
                index,
                state_before: state,
                attempts: attempts.clone(),
                arrivals_admitted: epoch.admitted,
                arrivals_blocked: epoch.blocked,
                state_after: epoch.next_state,
                blocked_ids: Vec::new(),
            });
        }
        state = epoch.next_state;
    }
    Ok(collector)
}

fn require_mode(config: &SimConfig, mode: SimMode) -> Result<(), SimError> {
    if config.mode == mode {
        Ok(())
    } else {
        Err(SimError::InvalidConfig(format!(
            "expected {mode:?} mode, config has {:?}",
            config.mode
        )))
    }
}

pub(crate) fn embedded_collector(
    config: &SimConfig,
    sink: Option<RecordSink<'_>>,
) -> Result<Collector, SimError> {
    let mut source =
        BernoulliSource::new(stream_rng(config.seed, config.stream), config.params.p());
    run_chain(config, &mut source, sink)
}

/// Monte-Carlo run of the observation process with Bernoulli(p) losses.
pub fn run_embedded(config: &SimConfig) -> Result<SimReport, SimError> {
    require_mode(config, SimMode::Embedded)?;
    Ok(embedded_collector(config, None)?.finish())
}

/// As [`run_embedded`], passing every observation (warmup included) to `sink`.
pub fn run_embedded_logged(
    config: &SimConfig,
    sink: RecordSink<'_>,
) -> Result<SimReport, SimError> {
    require_mode(config, SimMode::Embedded)?;
    Ok(embedded_collector(config, Some(sink))?.finish())
}

/// Same dynamics as [`run_embedded`] with attempt outcomes read from `loss` (1 = lost).
pub fn run_embedded_with_vector(
    config: &SimConfig,
    loss: &LossVector,
    mode: VectorMode,
) -> Result<SimReport, SimError> {
    require_mode(config, SimMode::Embedded)?;
    let mut source = VectorSource::new(loss, mode);
    Ok(run_chain(config, &mut source, None)?.finish())
}

pub fn run_embedded_with_vector_logged(
    config: &SimConfig,
    loss: &LossVector,
    mode: VectorMode,
    sink: RecordSink<'_>,
) -> Result<SimReport, SimError> {
    require_mode(config, SimMode::Embedded)?;
    let mut source = VectorSource::new(loss, mode);
    Ok(run_chain(config, &mut source, Some(sink))?.finish())
}
