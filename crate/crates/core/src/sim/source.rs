use rand::distr::{Bernoulli, Distribution};
use rand_chacha::ChaCha8Rng;

use super::loss::LossVector;
use crate::error::SimError;

/// Supplies the outcome of each send attempt, `true` when the message is delivered.
pub(crate) trait OutcomeSource {
    fn next_delivered(&mut self) -> Result<bool, SimError>;
}

pub(crate) struct BernoulliSource {
    rng: ChaCha8Rng,
    loss: Bernoulli,
}

impl BernoulliSource {
    pub fn new(rng: ChaCha8Rng, p: f64) -> Self {
        Self {
            rng,
            loss: Bernoulli::new(p).expect("p validated by ModelParams"),
        }
    }
}

impl OutcomeSource for BernoulliSource {
    fn next_delivered(&mut self) -> Result<bool, SimError> {
        Ok(!self.loss.sample(&mut self.rng))
    }
}

/// What happens when a loss vector runs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VectorMode {
    /// Running out is an error.
    #[default]
    Strict,
    /// Wrap around to the first bit.
    Cyclic,
}

pub(crate) struct VectorSource<'a> {
    bits: &'a [bool],
    pos: usize,
    mode: VectorMode,
}

impl<'a> VectorSource<'a> {
    pub fn new(loss: &'a LossVector, mode: VectorMode) -> Self {
        Self {
            bits: loss.bits(),
            pos: 0,
            mode,
        }
    }
}

impl OutcomeSource for VectorSource<'_> {
    fn next_delivered(&mut self) -> Result<bool, SimError> {
        let idx = match self.mode {
            VectorMode::Strict if self.pos >= self.bits.len() => {
                return Err(SimError::VectorExhausted {
                    len: self.bits.len(),
                    attempt: self.pos + 1,
                })
            }
            VectorMode::Strict => self.pos,
            VectorMode::Cyclic => self.pos % self.bits.len(),
        };
        self.pos += 1;
        Ok(!self.bits[idx])
    }
}
