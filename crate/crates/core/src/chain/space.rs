use serde::Serialize;

use crate::params::ModelParams;

/// Reachable buffer occupancies at observation instants: `{1} ∪ [m+1, km+1]`.
///
/// States `2..=m` never occur, so states are kept in ascending order next to an
/// explicit state-to-index map instead of being addressed by offset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateSpace {
    states: Vec<usize>,
    m: usize,
}

impl StateSpace {
    pub fn new(params: &ModelParams) -> Self {
        let m = params.arrivals();
        let states = std::iter::once(1)
            .chain(m + 1..=params.capacity())
            .collect();
        Self { states, m }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Largest state, the buffer capacity `M`.
    pub fn capacity(&self) -> usize {
        *self
            .states
            .last()
            .expect("state space always holds state 1")
    }

    pub fn index_of(&self, state: usize) -> Option<usize> {
        if state == 1 {
            Some(0)
        } else if state > self.m && state <= self.capacity() {
            Some(state - self.m)
        } else {
            None
        }
    }

    pub fn contains(&self, state: usize) -> bool {
        self.index_of(state).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.states.iter().copied()
    }
}

/// Ordered state space for `params`.
pub fn state_space(params: &ModelParams) -> StateSpace {
    StateSpace::new(params)
}
