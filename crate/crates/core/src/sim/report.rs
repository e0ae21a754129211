use serde::Serialize;

use super::config::{BlockedDenominator, SimConfig};
use super::stats::{batch_estimate, batch_of, Estimate};
use crate::chain::StateSpace;

/// Empirical occupancy of one state with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupancyEstimate {
    pub state: usize,
    pub freq: f64,
    pub ci95: f64,
}

/// Statistics of a simulation run after warmup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub s_hat: f64,
    pub s_ci95: f64,
    pub b_hat: f64,
    pub b_ci95: f64,
    pub occupancy: Vec<OccupancyEstimate>,
    pub n_used: u64,
    pub batches: usize,
    /// Fraction of used observations whose epoch ended in a timeout.
    pub timeout_fraction: f64,
    /// `transitions[i][j]` counts moves from state index `i` to `j`.
    pub transitions: Vec<Vec<u64>>,
    /// Virtual seconds simulated, timed mode only.
    pub elapsed_seconds: Option<f64>,
}

impl SimReport {
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

    pub fn occupancy_of(&self, state: usize) -> Option<OccupancyEstimate> {
        self.occupancy.iter().copied().find(|o| o.state == state)
    }

    /// Row-normalized transition frequencies.
    pub fn transition_frequencies(&self) -> Vec<Vec<f64>> {
        self.transitions
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| {
                        if total == 0 {
                            0.0
                        } else {
                            c as f64 / total as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
struct Batch {
    count: f64,
    size_sum: f64,
    blocked_sum: f64,
    timeouts: f64,
    occupancy: Vec<f64>,
}

/// Accumulates per-batch sums; replications merge by concatenating batches.
#[derive(Debug, Clone)]
pub(crate) struct Collector {
    space: StateSpace,
    denominator: BlockedDenominator,
    total: u64,
    seen: u64,
    batches: Vec<Batch>,
    transitions: Vec<Vec<u64>>,
    elapsed: Option<f64>,
}

impl Collector {
    pub fn new(config: &SimConfig) -> Self {
        let space = StateSpace::new(&config.params);
        let total = config.used_observations();
        let n_batches = config.batches.min(total as usize).max(1);
        let n = space.len();
        Self {
            denominator: config.blocked_denominator,
            total,
            seen: 0,
            batches: vec![
                Batch {
                    occupancy: vec![0.0; n],
                    ..Batch::default()
                };
                n_batches
            ],
            transitions: vec![vec![0; n]; n],
            elapsed: None,
            space,
        }
    }

    pub fn push(&mut self, state: usize, next_state: usize, blocked: usize, timed_out: bool) {
        let b = batch_of(
            self.seen.min(self.total - 1),
            self.total,
            self.batches.len(),
        );
        let from = self.space.index_of(state).expect("state within space");
        let to = self.space.index_of(next_state).expect("state within space");
        let batch = &mut self.batches[b];
        batch.count += 1.0;
        batch.size_sum += state as f64;
        batch.blocked_sum += blocked as f64;
        batch.timeouts += f64::from(u8::from(timed_out));
        batch.occupancy[from] += 1.0;
        self.transitions[from][to] += 1;
        self.seen += 1;
    }

    pub fn set_elapsed(&mut self, seconds: f64) {
        self.elapsed = Some(seconds);
    }

    pub fn merge(mut self, other: Collector) -> Self {
        self.seen += other.seen;
        self.total += other.total;
        self.batches.extend(other.batches);
        for (row, other_row) in self.transitions.iter_mut().zip(other.transitions) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
        self.elapsed = match (self.elapsed, other.elapsed) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        self
    }

    pub fn finish(self) -> SimReport {
        let counts: Vec<f64> = self.batches.iter().map(|b| b.count).collect();
        let column =
            |f: &dyn Fn(&Batch) -> f64| -> Vec<f64> { self.batches.iter().map(f).collect() };

        let size = batch_estimate(&column(&|b| b.size_sum), &counts);
        let blocked_denominators = match self.denominator {
            BlockedDenominator::All => counts.clone(),
            BlockedDenominator::TimeoutOnly => column(&|b| b.timeouts),
        };
        let mut blocked = batch_estimate(&column(&|b| b.blocked_sum), &blocked_denominators);
        if blocked.mean.is_nan() {
            blocked = Estimate {
                mean: 0.0,
                ci95: 0.0,
            };
        }
        let timeouts: f64 = column(&|b| b.timeouts).iter().sum();
        let used: f64 = counts.iter().sum();

        let occupancy = self
            .space
            .iter()
            .enumerate()
            .map(|(i, state)| {
                let est = batch_estimate(&column(&|b| b.occupancy[i]), &counts);
                OccupancyEstimate {
                    state,
                    freq: est.mean,
                    ci95: est.ci95,
                }
            })
            .collect();

        SimReport {
            s_hat: size.mean,
            s_ci95: size.ci95,
            b_hat: blocked.mean,
            b_ci95: blocked.ci95,
            occupancy,
            n_used: self.seen,
            batches: self.batches.len(),
            timeout_fraction: timeouts / used,
            transitions: self.transitions,
            elapsed_seconds: self.elapsed,
        }
    }
}
