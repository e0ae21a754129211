use nalgebra::DMatrix;

use super::space::StateSpace;
use crate::params::ModelParams;

/// One possible result of an observation epoch starting in state `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochOutcome {
    /// Messages sent successfully before the first failure (or all of them).
    pub successes: usize,
    /// Whether some attempt timed out.
    pub failed: bool,
    pub next_state: usize,
    pub blocked: usize,
    pub probability: f64,
}

/// Enumerates the `u + 1` disjoint outcomes of an epoch from state `u`.
///
/// With probability `(1-p)^u` the buffer drains and the next state is 1. For
/// each `i < u`, the first `i` messages succeed and message `i+1` times out with
/// probability `(1-p)^i p`; `m` arrivals accrue, and the buffer is capped at `M`
/// with the overflow blocked.
pub fn epoch_outcomes(params: &ModelParams, u: usize) -> impl Iterator<Item = EpochOutcome> {
    let p = params.p();
    let r = 1.0 - p;
    let m = params.arrivals();
    let cap = params.capacity();
    let mut survive = 1.0;
    (0..=u).map(move |i| {
        let weight = survive;
        survive *= r;
        if i == u {
            EpochOutcome {
                successes: u,
                failed: false,
                next_state: 1,
                blocked: 0,
                probability: weight,
            }
        } else {
            let wanted = u - i + m;
            EpochOutcome {
                successes: i,
                failed: true,
                next_state: wanted.min(cap),
                blocked: wanted.saturating_sub(cap),
                probability: weight * p,
            }
        }
    })
}

/// Row-stochastic transition matrix of the embedded chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: DMatrix<f64>,
    space: StateSpace,
    params: ModelParams,
}

impl TransitionMatrix {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Probability of moving from state `u` to state `v`; zero for states outside the space.
    pub fn prob(&self, u: usize, v: usize) -> f64 {
        match (self.space.index_of(u), self.space.index_of(v)) {
            (Some(i), Some(j)) => self.entries[(i, j)],
            _ => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.row_iter().map(|row| row.sum()).collect()
    }

    /// States reachable from `from` in at most `hops` steps (including `from`).
    pub fn reachable_within(&self, from: usize, hops: usize) -> Vec<usize> {
        let n = self.space.len();
        let Some(start) = self.space.index_of(from) else {
            return Vec::new();
        };
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut frontier = vec![start];
        for _ in 0..hops {
            let mut next = Vec::new();
            for &i in &frontier {
                for (j, seen_j) in seen.iter_mut().enumerate() {
                    if self.entries[(i, j)] > 0.0 && !*seen_j {
                        *seen_j = true;
                        next.push(j);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        self.space
            .iter()
            .zip(seen)
            .filter_map(|(state, hit)| hit.then_some(state))
            .collect()
    }

    /// Every state reaches every other state.
    pub fn is_irreducible(&self) -> bool {
        let n = self.space.len();
        self.space
            .iter()
            .all(|s| self.reachable_within(s, n).len() == n)
    }

    /// Every state has a positive self-loop, which forces period 1.
    pub fn has_self_loops(&self) -> bool {
        (0..self.space.len()).all(|i| self.entries[(i, i)] > 0.0)
    }
}

/// Builds the transition matrix from the prefix-success rule.
pub fn build_transition_matrix(params: &ModelParams) -> TransitionMatrix {
    let space = StateSpace::new(params);
    let n = space.len();
    let mut entries = DMatrix::zeros(n, n);
    for (row, u) in space.iter().enumerate() {
        for outcome in epoch_outcomes(params, u) {
            let col = space
                .index_of(outcome.next_state)
                .expect("epoch outcomes stay inside the state space");
            entries[(row, col)] += outcome.probability;
        }
    }
    TransitionMatrix {
        entries,
        space,
        params: *params,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix(p: f64, m: u32, k: u32) -> TransitionMatrix {
        build_transition_matrix(&ModelParams::new(p, m, k).unwrap())
    }

    /// Walks every success/failure prefix of length at most `u` explicitly.
    fn enumerate_row(p: f64, m: usize, cap: usize, u: usize) -> Vec<(usize, f64)> {
        fn walk(
            p: f64,
            m: usize,
            cap: usize,
            u: usize,
            sent: usize,
            weight: f64,
            out: &mut Vec<(usize, f64)>,
        ) {
            if sent == u {
                out.push((1, weight));
                return;
            }
            out.push(((u - sent + m).min(cap), weight * p));
            walk(p, m, cap, u, sent + 1, weight * (1.0 - p), out);
        }
        let mut out = Vec::new();
        walk(p, m, cap, u, 0, 1.0, &mut out);
        out
    }

    #[test]
    fn row_one_k2() {
        let t = matrix(0.5, 2, 2);
        assert_eq!(t.prob(1, 1), 0.5);
        assert_eq!(t.prob(1, 3), 0.5);
        assert_eq!(t.prob(1, 4), 0.0);
        assert_eq!(t.prob(1, 5), 0.0);
    }

    #[test]
    fn k2_cells_match_closed_expressions() {
        for &p in &[0.1, 0.37, 0.8] {
            for m in 2..7u32 {
                let t = matrix(p, m, 2);
                let (m, r) = (m as usize, 1.0 - p);
                assert_abs_diff_eq!(t.prob(m + 2, 2 * m + 1), p + r * p, epsilon = 1e-15);
                assert_abs_diff_eq!(
                    t.prob(2 * m, m + 2),
                    r.powi(2 * m as i32 - 2) * p,
                    epsilon = 1e-15
                );
                for u in m + 1..=2 * m + 1 {
                    assert_abs_diff_eq!(t.prob(u, 1), r.powi(u as i32), epsilon = 1e-15);
                    for v in m + 1..=2 * m {
                        let expected = r.powi((u + m - v) as i32) * p;
                        assert_abs_diff_eq!(t.prob(u, v), expected, epsilon = 1e-15);
                    }
                    let capped: f64 = (0..=u + m - (2 * m + 1))
                        .map(|i| r.powi(i as i32) * p)
                        .sum();
                    assert_abs_diff_eq!(t.prob(u, 2 * m + 1), capped, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn k1_two_state_rows() {
        let (p, m) = (0.3, 4u32);
        let t = matrix(p, m, 1);
        let r: f64 = 1.0 - p;
        assert_abs_diff_eq!(t.prob(5, 1), r.powi(5), epsilon = 1e-15);
        assert_abs_diff_eq!(t.prob(5, 5), 1.0 - r.powi(5), epsilon = 1e-15);
        assert_eq!(t.prob(1, 5), p);
    }

    #[test]
    fn rows_match_exhaustive_enumeration() {
        let (p, m, k) = (0.3, 3u32, 3u32);
        let t = matrix(p, m, k);
        let cap = t.space().capacity();
        for u in t.space().iter() {
            let mut expected = vec![0.0; cap + 1];
            for (v, w) in enumerate_row(p, m as usize, cap, u) {
                expected[v] += w;
            }
            for v in 1..=cap {
                assert_abs_diff_eq!(t.prob(u, v), expected[v], epsilon = 1e-15);
            }
        }
        for sum in t.row_sums() {
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn transition_structure_for_small_k() {
        for k in 1..=2 {
            for m in 1..8 {
                let t = matrix(0.4, m, k);
                assert!(t.is_irreducible());
                assert!(t.has_self_loops());
                for s in t.space().iter() {
                    assert_eq!(t.reachable_within(s, 2).len(), t.space().len());
                }
            }
        }
        let t = matrix(0.4, 3, 4);
        assert!(t.is_irreducible());
        assert!(t.has_self_loops());
    }

    #[test]
    fn endpoints_are_absorbing() {
        let t = matrix(0.0, 3, 2);
        assert!(!t.is_irreducible());
        assert_eq!(t.prob(7, 1), 1.0);
        let t = matrix(1.0, 3, 2);
        assert_eq!(t.prob(1, 4), 1.0);
        assert_eq!(t.prob(7, 7), 1.0);
    }

    #[test]
    fn outcome_blocking_counts() {
        let params = ModelParams::new(0.5, 2, 2).unwrap();
        let outs: Vec<_> = epoch_outcomes(&params, 4).collect();
        assert_eq!(outs.len(), 5);
        assert_eq!((outs[0].next_state, outs[0].blocked), (5, 1));
        assert_eq!((outs[1].next_state, outs[1].blocked), (5, 0));
        assert_eq!((outs[2].next_state, outs[2].blocked), (4, 0));
        assert_eq!((outs[4].next_state, outs[4].failed), (1, false));
    }
}
