use serde::{Deserialize, Serialize};

use super::stats::MIN_BATCHES;
use crate::error::SimError;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Jump directly from observation to observation.
    #[default]
    Embedded,
    /// Advance a virtual clock with periodic arrivals and timeouts.
    Timed,
}

/// Which observations count in the denominator of the blocked-arrivals mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BlockedDenominator {
    #[default]
    All,
    TimeoutOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    /// Total observations, warmup included.
    pub n_observations: u64,
    pub warmup_observations: u64,
    pub seed: u64,
    /// RNG stream for this run; replications offset it.
    pub stream: u64,
    pub mode: SimMode,
    pub batches: usize,
    pub blocked_denominator: BlockedDenominator,
    /// Seconds each successful send takes in timed mode.
    pub service_time: f64,
}

impl SimConfig {
    pub const DEFAULT_WARMUP: u64 = 1_000;
    pub const DEFAULT_BATCHES: usize = 100;

    pub fn new(params: ModelParams, n_observations: u64, seed: u64) -> Self {
        Self {
            params,
            n_observations,
            warmup_observations: Self::DEFAULT_WARMUP.min(n_observations.saturating_sub(1)),
            seed,
            stream: 0,
            mode: SimMode::Embedded,
            batches: Self::DEFAULT_BATCHES,
            blocked_denominator: BlockedDenominator::All,
            service_time: 0.0,
        }
    }

    pub fn timed(mut self) -> Self {
        self.mode = SimMode::Timed;
        self
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup_observations = warmup;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn used_observations(&self) -> u64 {
        self.n_observations - self.warmup_observations
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_observations == 0 {
            return Err(SimError::InvalidConfig(
                "n_observations must be at least 1".into(),
            ));
        }
        if self.warmup_observations >= self.n_observations {
            return Err(SimError::InvalidConfig(format!(
                "warmup {} must be below n_observations {}",
                self.warmup_observations, self.n_observations
            )));
        }
        if self.batches < MIN_BATCHES {
            return Err(SimError::InvalidConfig(format!(
                "at least {MIN_BATCHES} batches required, got {}",
                self.batches
            )));
        }
        if !(self.service_time.is_finite() && self.service_time >= 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "service time {} must be finite and non-negative",
                self.service_time
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.2, 5, 1).unwrap()
    }

    #[test]
    fn warmup_is_clamped_for_short_runs() {
        let cfg = SimConfig::new(params(), 10, 1);
        assert_eq!(cfg.warmup_observations, 9);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = SimConfig::new(params(), 100, 1);
        cfg.warmup_observations = 100;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::new(params(), 100, 1);
        cfg.batches = 10;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::new(params(), 0, 1);
        cfg.warmup_observations = 0;
        assert!(cfg.validate().is_err());
    }
}
