//! Monte-Carlo, clock-level and scripted simulation of the observation process.

mod config;
mod embedded;
mod loss;
mod record;
mod report;
mod rng;
mod source;
pub mod stats;
mod timed;
mod trace;

use rayon::prelude::*;

pub use config::{BlockedDenominator, SimConfig, SimMode};
pub use embedded::{
    run_embedded, run_embedded_logged, run_embedded_with_vector, run_embedded_with_vector_logged,
    RecordSink,
};
pub use loss::{make_loss_vector, LossVector};
pub use record::{write_ndjson, write_ndjson_line, ObservationRecord};
pub use report::{OccupancyEstimate, SimReport};
pub use rng::{replication_stream, stream_rng};
pub use source::VectorMode;
pub use timed::{run_timed, run_timed_logged};
pub use trace::{canonical_params, run_trace, CANONICAL_SCRIPT, CANONICAL_STATES};

use crate::error::SimError;

/// Runs the configured mode once.
pub fn simulate(config: &SimConfig) -> Result<SimReport, SimError> {
    match config.mode {
        SimMode::Embedded => run_embedded(config),
        SimMode::Timed => run_timed(config),
    }
}

/// Runs independent replications in parallel and pools their batches.
///
/// Replication `r` uses stream `replication_stream(config.stream, r)`; results
/// are merged in replication order, so the report does not depend on scheduling.
pub fn run_replications(config: &SimConfig, replications: u32) -> Result<SimReport, SimError> {
    if replications == 0 {
        return Err(SimError::InvalidConfig(
            "replications must be at least 1".into(),
        ));
    }
    let collectors = (0..replications)
        .into_par_iter()
        .map(|r| {
            let cfg = config
                .clone()
                .with_stream(replication_stream(config.stream, r as u64));
            match cfg.mode {
                SimMode::Embedded => embedded::embedded_collector(&cfg, None),
                SimMode::Timed => timed::timed_bernoulli(&cfg, None),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let merged = collectors
        .into_iter()
        .reduce(|a, b| a.merge(b))
        .expect("at least one replication");
    Ok(merged.finish())
}
