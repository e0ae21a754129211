use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Relative slack allowed when checking that `timeout / arrival_interval` is an integer.
const RATIO_TOLERANCE: f64 = 1e-9;

/// Wall-clock parameters of the arrival process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Seconds between consecutive message arrivals.
    pub arrival_interval: f64,
    /// Seconds the client waits for a response before retransmitting.
    pub timeout: f64,
}

impl Timing {
    pub fn new(arrival_interval: f64, timeout: f64) -> Result<Self, ModelError> {
        let timing = Self {
            arrival_interval,
            timeout,
        };
        timing.arrivals_per_timeout()?;
        Ok(timing)
    }

    /// Number of arrivals inside one timeout window. Rejects non-integral ratios.
    pub fn arrivals_per_timeout(&self) -> Result<u32, ModelError> {
        let (t, to) = (self.arrival_interval, self.timeout);
        if !(t.is_finite() && to.is_finite() && t > 0.0 && to > 0.0) {
            return Err(ModelError::InvalidTiming {
                arrival_interval: t,
                timeout: to,
            });
        }
        let ratio = to / t;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > RATIO_TOLERANCE * rounded {
            return Err(ModelError::NonIntegralRatio {
                arrival_interval: t,
                timeout: to,
            });
        }
        Ok(rounded as u32)
    }

    /// Multiplies both durations by `1 / factor`, keeping the ratio.
    pub fn scaled_down(&self, factor: f64) -> Self {
        Self {
            arrival_interval: self.arrival_interval / factor,
            timeout: self.timeout / factor,
        }
    }
}

/// Loss probability, arrivals per timeout and buffer multiplier.
///
/// The buffer capacity is always `k * m + 1`; every formula in the crate reads
/// its inputs from here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    p: f64,
    m: u32,
    k: u32,
    timing: Option<Timing>,
}

impl ModelParams {
    pub fn new(p: f64, m: u32, k: u32) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::InvalidProbability(p));
        }
        if m == 0 {
            return Err(ModelError::NonPositive {
                name: "m",
                value: 0,
            });
        }
        if k == 0 {
            return Err(ModelError::NonPositive {
                name: "k",
                value: 0,
            });
        }
        Ok(Self {
            p,
            m,
            k,
            timing: None,
        })
    }

    /// Builds parameters from wall-clock timing, deriving `m = timeout / t`.
    pub fn from_timing(p: f64, k: u32, timing: Timing) -> Result<Self, ModelError> {
        let m = timing.arrivals_per_timeout()?;
        Ok(Self::new(p, m, k)?.with_timing_unchecked(timing))
    }

    /// Attaches timing, checking that it implies the same `m`.
    pub fn with_timing(self, timing: Timing) -> Result<Self, ModelError> {
        let implied = timing.arrivals_per_timeout()?;
        if implied != self.m {
            return Err(ModelError::InconsistentTiming {
                implied,
                given: self.m,
            });
        }
        Ok(self.with_timing_unchecked(timing))
    }

    fn with_timing_unchecked(mut self, timing: Timing) -> Self {
        self.timing = Some(timing);
        self
    }

    /// Same parameters with a different loss probability.
    pub fn with_p(self, p: f64) -> Result<Self, ModelError> {
        let mut next = Self::new(p, self.m, self.k)?;
        next.timing = self.timing;
        Ok(next)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn timing(&self) -> Option<Timing> {
        self.timing
    }

    /// Buffer capacity `M = k * m + 1`.
    pub fn capacity(&self) -> usize {
        self.k as usize * self.m as usize + 1
    }

    /// `m` as a state-sized integer.
    pub fn arrivals(&self) -> usize {
        self.m as usize
    }

    /// `p` strictly inside (0, 1), where the chain is irreducible.
    pub fn is_interior(&self) -> bool {
        self.p > 0.0 && self.p < 1.0
    }
}
