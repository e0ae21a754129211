use std::path::{Path, PathBuf};
use std::time::Duration;

use restbuf_core::sim::{make_loss_vector, LossVector};
use restbuf_core::{ModelParams, Timing};
use serde::{Deserialize, Serialize};

use crate::error::TestbedError;
use crate::fault::InjectionSide;
use crate::message::DEFAULT_FRAME_SIZE;

pub const DEFAULT_VECTOR_LENGTH: usize = 100_000;

/// Experiment description as read from a JSON file.
///
/// Exactly one of `p` and `loss_vector` is given. With `p` a shuffled vector of
/// `vector_length` bits is generated from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestbedConfig {
    #[serde(default)]
    pub p: Option<f64>,
    /// Path to a 0/1 text file, resolved against the config file's directory.
    #[serde(default)]
    pub loss_vector: Option<PathBuf>,
    pub m: u32,
    pub k: u32,
    pub t_scaled: f64,
    #[serde(rename = "T_o_scaled")]
    pub timeout_scaled: f64,
    #[serde(default = "default_frame")]
    pub frame_size: usize,
    #[serde(default)]
    pub injection_side: InjectionSide,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_observations")]
    pub observations: u64,
    #[serde(default)]
    pub warmup: u64,
    /// Fault stall in seconds; defaults to 1.25 × T_o.
    #[serde(default)]
    pub pause_scaled: Option<f64>,
    #[serde(default)]
    pub keep_alive: bool,
    #[serde(default = "default_vector_length")]
    pub vector_length: usize,
}

fn default_frame() -> usize {
    DEFAULT_FRAME_SIZE
}

fn default_observations() -> u64 {
    5_000
}

fn default_vector_length() -> usize {
    DEFAULT_VECTOR_LENGTH
}

impl TestbedConfig {
    pub fn from_json(text: &str) -> Result<Self, TestbedError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config file; a relative `loss_vector` path becomes relative to it.
    pub fn load(path: &Path) -> Result<Self, TestbedError> {
        let mut config = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let (Some(vector), Some(dir)) = (config.loss_vector.as_mut(), path.parent()) {
            if vector.is_relative() {
                *vector = dir.join(&*vector);
            }
        }
        Ok(config)
    }

    pub fn timing(&self) -> Result<Timing, TestbedError> {
        Ok(Timing::new(self.t_scaled, self.timeout_scaled)?)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_scaled)
    }

    pub fn pause(&self) -> Option<Duration> {
        self.pause_scaled.map(Duration::from_secs_f64)
    }

    /// Loss vector to drive the schedule, read or generated.
    pub fn loss_vector(&self) -> Result<LossVector, TestbedError> {
        match (self.p, &self.loss_vector) {
            (Some(p), None) => Ok(make_loss_vector(p, self.vector_length, self.seed)?),
            (None, Some(path)) => Ok(LossVector::parse(&std::fs::read_to_string(path)?)?),
            _ => Err(TestbedError::Config(
                "give exactly one of `p` and `loss_vector`".into(),
            )),
        }
    }

    /// Model parameters with `p` taken from the vector's loss fraction.
    pub fn params(&self, vector: &LossVector) -> Result<ModelParams, TestbedError> {
        let timing = self.timing()?;
        let m = timing.arrivals_per_timeout()?;
        if m != self.m {
            return Err(TestbedError::Config(format!(
                "T_o/t = {m} but m = {}",
                self.m
            )));
        }
        Ok(ModelParams::from_timing(
            vector.loss_fraction(),
            self.k,
            timing,
        )?)
    }
}
