//! Balance-equation residuals of a candidate stationary vector.
//!
//! For every state the generic form compares total inflow with total outflow
//! using the built transition matrix. For `k = 1` and `k = 2` the hand-derived
//! per-state equations and their simplified consequences are evaluated
//! term by term as well, independently of the matrix.

use serde::Serialize;

use super::distribution::StationaryDistribution;
use super::matrix::build_transition_matrix;
use super::space::StateSpace;
use crate::error::ModelError;
use crate::params::ModelParams;

/// Which balance relation a residual belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum BalanceEquation {
    /// Inflow equals outflow at `state`, from the transition matrix.
    Flow(usize),
    /// `π(1)·p = Σ_{i=m+1}^{M} π(i)(1-p)^i`, any `k`.
    StateOne,
    /// `π(m+1)(1-p)^{m+1} = π(1)·p`, `k = 1`.
    K1Full,
    /// State `m+1`, `k = 2`.
    K2First,
    /// Intermediate state `e ∈ [m+2, 2m-1]`, `k = 2`.
    K2Interior(usize),
    /// State `2m`, `k = 2`, `m ≥ 2`.
    K2Penultimate,
    /// State `2m+1`, `k = 2`.
    K2Full,
    /// `π(m+1) = π(1)·p/(1-p)`.
    SimplifiedFirst,
    /// `π(e) = π(1)·p²(1-p)^{m-e}` for `e ∈ [m+2, 2m]`.
    SimplifiedInterior(usize),
    /// `π(2m+1) = 1 - [1 + p(1-p)^{-m}]π(1)`.
    SimplifiedFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub equation: BalanceEquation,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceResiduals {
    pub residuals: Vec<Residual>,
}

impl BalanceResiduals {
    pub fn max(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    /// Largest residual among the hand-derived (non-flow) equations.
    pub fn max_literal(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| !matches!(r.equation, BalanceEquation::Flow(_)))
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }

    /// Largest inflow/outflow mismatch from the transition matrix.
    pub fn max_flow(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| matches!(r.equation, BalanceEquation::Flow(_)))
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, equation: BalanceEquation) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.equation == equation)
            .map(|r| r.value)
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }
}

/// `Σ_{i=lo}^{hi} f(i)`, empty when `lo > hi`.
fn sum_range(lo: i32, hi: i32, f: impl Fn(i32) -> f64) -> f64 {
    (lo..=hi).map(f).sum()
}

/// Evaluates every applicable balance equation at `dist`.
///
/// The simplified forms divide by `1 - p` and are skipped at `p = 1`.
pub fn balance_residuals(
    params: &ModelParams,
    dist: &StationaryDistribution,
) -> Result<BalanceResiduals, ModelError> {
    if *dist.space() != StateSpace::new(params) {
        return Err(ModelError::StateSpaceMismatch);
    }
    let mut out = Vec::new();
    let mut push = |equation, lhs: f64, rhs: f64| {
        out.push(Residual {
            equation,
            value: (lhs - rhs).abs(),
        })
    };

    let matrix = build_transition_matrix(params);
    for (j, v) in dist.space().iter().enumerate() {
        let inflow: f64 = dist
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(i, (_, prob))| prob * matrix.entries()[(i, j)])
            .sum();
        let outflow = dist.probabilities()[j] * (1.0 - matrix.entries()[(j, j)]);
        push(BalanceEquation::Flow(v), inflow, outflow);
    }

    let p = params.p();
    let r = 1.0 - p;
    let m = params.m() as i32;
    let full = params.capacity() as i32;
    let pi = |state: i32| dist.prob(state as usize);
    let pow = |e: i32| r.powi(e);

    push(
        BalanceEquation::StateOne,
        pi(1) * p,
        sum_range(m + 1, full, |i| pi(i) * pow(i)),
    );

    match params.k() {
        1 => push(BalanceEquation::K1Full, pi(m + 1) * pow(m + 1), pi(1) * p),
        2 => {
            let top = 2 * m + 1;
            push(
                BalanceEquation::K2First,
                pi(m + 1) * (pow(m + 1) + p * sum_range(m + 2, top, |i| pow(top - i))),
                pi(1) * p + p * sum_range(m + 2, top, |i| pi(i) * pow(i - 1)),
            );
            for e in m + 2..=2 * m - 1 {
                let leave = pow(e)
                    + p * (sum_range(m + 1, e - 1, |i| pow(e - i + m))
                        + sum_range(e + 1, 2 * m, |i| pow(e - i + m))
                        + sum_range(0, e - m - 1, pow));
                let enter = sum_range(m + 1, e - 1, |i| pi(i) * pow(i - e + m) * p)
                    + sum_range(e + 1, top, |i| pi(i) * pow(i - e + m) * p);
                push(
                    BalanceEquation::K2Interior(e as usize),
                    pi(e) * leave,
                    enter,
                );
            }
            if m >= 2 {
                let leave = pow(2 * m)
                    + p * (sum_range(m + 1, 2 * m - 1, |i| pow(3 * m - i))
                        + sum_range(0, m - 1, pow));
                let enter = sum_range(m + 1, 2 * m - 1, |i| pi(i) * pow(i - m) * p)
                    + pi(top) * pow(m + 1) * p;
                push(BalanceEquation::K2Penultimate, pi(2 * m) * leave, enter);
            }
            push(
                BalanceEquation::K2Full,
                pi(top) * (pow(top) + p * sum_range(m + 1, 2 * m, |i| pow(3 * m - i + 1))),
                sum_range(m + 1, 2 * m, |i| {
                    pi(i) * sum_range(0, i - m - 1, |j| pow(j) * p)
                }),
            );

            if p < 1.0 {
                push(BalanceEquation::SimplifiedFirst, pi(m + 1), pi(1) * p / r);
                for e in m + 2..=2 * m {
                    push(
                        BalanceEquation::SimplifiedInterior(e as usize),
                        pi(e),
                        pi(1) * p * p * pow(m - e),
                    );
                }
                push(
                    BalanceEquation::SimplifiedFull,
                    pi(top),
                    1.0 - (1.0 + p * pow(-m)) * pi(1),
                );
            }
        }
        _ => {}
    }

    Ok(BalanceResiduals { residuals: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{stationary_closed_k1, stationary_closed_k2, SolveMethod};

    #[test]
    fn k1_closed_form_satisfies_balance() {
        let params = ModelParams::new(0.2, 5, 1).unwrap();
        let dist = stationary_closed_k1(&params).unwrap();
        let res = balance_residuals(&params, &dist).unwrap();
        assert!(res.get(BalanceEquation::StateOne).is_some());
        assert!(res.get(BalanceEquation::K1Full).is_some());
        assert!(res.max() < 1e-12, "{res:?}");
    }

    #[test]
    fn k2_closed_form_satisfies_balance() {
        let params = ModelParams::new(0.3, 5, 2).unwrap();
        let dist = stationary_closed_k2(&params).unwrap();
        let res = balance_residuals(&params, &dist).unwrap();
        for e in 7..=9 {
            assert!(res.get(BalanceEquation::K2Interior(e)).is_some());
        }
        for e in 7..=10 {
            assert!(res.get(BalanceEquation::SimplifiedInterior(e)).is_some());
        }
        assert!(res.get(BalanceEquation::K2Penultimate).is_some());
        assert!(res.max() < 1e-12, "{res:?}");
    }

    #[test]
    fn uniform_vector_is_rejected() {
        let params = ModelParams::new(0.3, 5, 2).unwrap();
        let space = StateSpace::new(&params);
        let n = space.len();
        let uniform =
            StationaryDistribution::new(space, vec![1.0 / n as f64; n], SolveMethod::Numeric);
        let res = balance_residuals(&params, &uniform).unwrap();
        assert!(res.max() > 1e-3);
        assert!(res.max_literal() > 1e-3);
    }

    #[test]
    fn mismatched_space_is_an_error() {
        let params = ModelParams::new(0.3, 5, 2).unwrap();
        let other = ModelParams::new(0.3, 5, 1).unwrap();
        let dist = stationary_closed_k1(&other).unwrap();
        assert_eq!(
            balance_residuals(&params, &dist).unwrap_err(),
            ModelError::StateSpaceMismatch
        );
    }

    #[test]
    fn m_equal_one_skips_overlapping_equations() {
        let params = ModelParams::new(0.4, 1, 2).unwrap();
        let dist = stationary_closed_k2(&params).unwrap();
        let res = balance_residuals(&params, &dist).unwrap();
        assert!(res.get(BalanceEquation::K2Penultimate).is_none());
        assert!(res.max() < 1e-12);
    }
}
