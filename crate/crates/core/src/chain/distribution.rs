use serde::Serialize;

use super::matrix::TransitionMatrix;
use super::space::StateSpace;

/// How a stationary distribution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedK1,
    ClosedK2,
    Numeric,
}

/// Probability vector over a [`StateSpace`], in state order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    space: StateSpace,
    pi: Vec<f64>,
    method: SolveMethod,
}

impl StationaryDistribution {
    /// Wraps a probability vector. Panics if the lengths disagree.
    pub fn new(space: StateSpace, pi: Vec<f64>, method: SolveMethod) -> Self {
        assert_eq!(space.len(), pi.len(), "one probability per state");
        Self { space, pi, method }
    }

    pub(crate) fn point_mass(space: StateSpace, state: usize, method: SolveMethod) -> Self {
        let mut pi = vec![0.0; space.len()];
        pi[space.index_of(state).expect("state in space")] = 1.0;
        Self { space, pi, method }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.pi
    }

    pub fn method(&self) -> SolveMethod {
        self.method
    }

    /// `π(state)`, zero for states outside the space.
    pub fn prob(&self, state: usize) -> f64 {
        self.space.index_of(state).map_or(0.0, |i| self.pi[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.space.iter().zip(self.pi.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.pi.iter().sum()
    }

    /// `max_e |(πP − π)_e|`.
    pub fn fixed_point_residual(&self, matrix: &TransitionMatrix) -> f64 {
        let p = matrix.entries();
        (0..self.pi.len())
            .map(|j| {
                let inflow: f64 = (0..self.pi.len()).map(|i| self.pi[i] * p[(i, j)]).sum();
                (inflow - self.pi[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest absolute difference to another distribution over the same states.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(
            self.space, other.space,
            "distributions over different spaces"
        );
        self.pi
            .iter()
            .zip(&other.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
