use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use restbuf_core::sim::LossVector;
use serde::{Deserialize, Serialize};

use crate::error::TestbedError;

/// Where lost links are emulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InjectionSide {
    /// The server holds the response back for the pause.
    #[default]
    Server,
    /// The client stalls for the pause instead of sending.
    Client,
}

/// Loss vector consumed one bit per request, cyclically, with the stall length.
#[derive(Debug)]
pub struct FaultSchedule {
    vector: LossVector,
    pause: Duration,
    cursor: AtomicUsize,
}

impl FaultSchedule {
    /// Default stall relative to the client timeout.
    pub const DEFAULT_PAUSE_FACTOR: f64 = 1.25;

    /// Stall of `DEFAULT_PAUSE_FACTOR × timeout`.
    pub fn for_timeout(vector: LossVector, timeout: Duration) -> Self {
        Self::with_pause(vector, timeout.mul_f64(Self::DEFAULT_PAUSE_FACTOR))
    }

    /// Explicit stall; no check against the timeout.
    pub fn with_pause(vector: LossVector, pause: Duration) -> Self {
        Self {
            vector,
            pause,
            cursor: AtomicUsize::new(0),
        }
    }

    /// Checks that a stalled request cannot be answered before the client gives up.
    pub fn validate(&self, timeout: Duration) -> Result<(), TestbedError> {
        if self.pause < timeout {
            return Err(TestbedError::Config(format!(
                "pause {:?} is shorter than the timeout {timeout:?}",
                self.pause
            )));
        }
        Ok(())
    }

    /// Next bit of the vector; `true` means this request is lost.
    pub fn next_is_loss(&self) -> bool {
        let i = self.cursor.fetch_add(1, Ordering::Relaxed);
        self.vector.bits()[i % self.vector.len()]
    }

    pub fn pause(&self) -> Duration {
        self.pause
    }

    pub fn vector(&self) -> &LossVector {
        &self.vector
    }

    /// Bits consumed so far.
    pub fn consumed(&self) -> usize {
        self.cursor.load(Ordering::Relaxed)
    }
}
