//! Closed-form stationary distributions and mean occupancy for `k = 1` and `k = 2`.
//!
//! The formulas are only evaluated for `0 < p < 1`. At `p = 0` the chain is
//! absorbed in state 1 and at `p = 1` in state `M`, so those endpoints return the
//! limiting point masses directly.

use super::distribution::{SolveMethod, StationaryDistribution};
use super::space::StateSpace;
use crate::error::ModelError;
use crate::params::ModelParams;

fn endpoint(params: &ModelParams, method: SolveMethod) -> Option<StationaryDistribution> {
    let space = StateSpace::new(params);
    if params.p() == 0.0 {
        Some(StationaryDistribution::point_mass(space, 1, method))
    } else if params.p() == 1.0 {
        let full = params.capacity();
        Some(StationaryDistribution::point_mass(space, full, method))
    } else {
        None
    }
}

fn require_k(params: &ModelParams, k: u32) -> Result<(), ModelError> {
    if params.k() == k {
        Ok(())
    } else {
        Err(ModelError::WrongMultiplier {
            expected: k,
            actual: params.k(),
        })
    }
}

/// Two-state solution: `π(1) = r^{m+1} / (p + r^{m+1})`, `π(m+1) = p / (p + r^{m+1})`.
pub fn stationary_closed_k1(params: &ModelParams) -> Result<StationaryDistribution, ModelError> {
    require_k(params, 1)?;
    if let Some(dist) = endpoint(params, SolveMethod::ClosedK1) {
        return Ok(dist);
    }
    let p = params.p();
    let drain = (1.0 - p).powi(params.m() as i32 + 1);
    let denom = p + drain;
    Ok(StationaryDistribution::new(
        StateSpace::new(params),
        vec![drain / denom, p / denom],
        SolveMethod::ClosedK1,
    ))
}

/// Denominator shared by the `k = 2` distribution and mean occupancy.
fn k2_denominator(p: f64, m: i32) -> f64 {
    let r = 1.0 - p;
    p - r.powi(m) * (p + (m - 1) as f64 * p * p - r.powi(m + 1) - p * r)
}

/// `(m + 2)`-state solution for `k = 2`.
pub fn stationary_closed_k2(params: &ModelParams) -> Result<StationaryDistribution, ModelError> {
    require_k(params, 2)?;
    if let Some(dist) = endpoint(params, SolveMethod::ClosedK2) {
        return Ok(dist);
    }
    let p = params.p();
    let r = 1.0 - p;
    let m = params.m() as i32;
    let d = k2_denominator(p, m);

    let mut pi = Vec::with_capacity(m as usize + 2);
    pi.push(r.powi(2 * m + 1) / d);
    pi.push(p * r.powi(2 * m) / d);
    for e in m + 2..=2 * m {
        pi.push(p * p * r.powi(3 * m - e + 1) / d);
    }
    pi.push(p * (1.0 - r.powi(m) * (1.0 + (m - 1) as f64 * p)) / d);

    Ok(StationaryDistribution::new(
        StateSpace::new(params),
        pi,
        SolveMethod::ClosedK2,
    ))
}

/// Closed-form stationary distribution for `k ∈ {1, 2}`.
pub fn stationary_closed(params: &ModelParams) -> Result<StationaryDistribution, ModelError> {
    match params.k() {
        1 => stationary_closed_k1(params),
        2 => stationary_closed_k2(params),
        k => Err(ModelError::NoClosedForm(k)),
    }
}

/// Expected buffer occupancy at observations from the closed-form expressions.
pub fn expected_buffer_size_closed(params: &ModelParams) -> Result<f64, ModelError> {
    let (p, m) = (params.p(), params.m() as i32);
    match params.k() {
        1 | 2 if p == 0.0 => Ok(1.0),
        1 | 2 if p == 1.0 => Ok(params.capacity() as f64),
        1 => {
            let drain = (1.0 - p).powi(m + 1);
            Ok((drain + (m + 1) as f64 * p) / (p + drain))
        }
        2 => {
            let r = 1.0 - p;
            let mf = m as f64;
            let num = r.powi(m) * (r * (2.0 * r.powi(m) - 1.0) - mf * p * p * (2.0 * mf + 1.0))
                + (2.0 * mf + 1.0) * p;
            Ok(num / k2_denominator(p, m))
        }
        k => Err(ModelError::NoClosedForm(k)),
    }
}
