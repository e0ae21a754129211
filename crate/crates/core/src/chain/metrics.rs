use serde::Serialize;

use super::distribution::StationaryDistribution;
use super::matrix::epoch_outcomes;
use crate::params::ModelParams;

/// Steady-state mean occupancy and mean blocked arrivals per observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainMetrics {
    pub expected_size: f64,
    pub expected_blocked: f64,
}

impl ChainMetrics {
    pub fn from_distribution(params: &ModelParams, dist: &StationaryDistribution) -> Self {
        Self {
            expected_size: expected_buffer_size(dist),
            expected_blocked: expected_blocked(params, dist),
        }
    }
}

/// `S = Σ_e e·π(e)`.
pub fn expected_buffer_size(dist: &StationaryDistribution) -> f64 {
    dist.iter().map(|(state, prob)| state as f64 * prob).sum()
}

/// Mean number of arrivals dropped per observation.
///
/// Only a timeout can overflow the buffer: if `i` messages succeed before the
/// failure, `u - i + m` messages compete for `M` slots.
pub fn expected_blocked(params: &ModelParams, dist: &StationaryDistribution) -> f64 {
    dist.iter()
        .filter(|&(_, prob)| prob > 0.0)
        .map(|(u, prob)| {
            let per_state: f64 = epoch_outcomes(params, u)
                .map(|o| o.probability * o.blocked as f64)
                .sum();
            prob * per_state
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_transition_matrix, stationary_closed, stationary_numeric};
    use approx::assert_abs_diff_eq;

    fn params(p: f64, m: u32, k: u32) -> ModelParams {
        ModelParams::new(p, m, k).unwrap()
    }

    #[test]
    fn reported_mean_occupancy() {
        let d = stationary_closed(&params(0.2, 5, 1)).unwrap();
        assert_abs_diff_eq!(expected_buffer_size(&d), 3.164, epsilon = 5e-4);
        let d = stationary_closed(&params(0.2, 5, 2)).unwrap();
        assert_abs_diff_eq!(expected_buffer_size(&d), 6.302, epsilon = 5e-4);
        let d = stationary_closed(&params(0.0, 5, 2)).unwrap();
        assert_eq!(expected_buffer_size(&d), 1.0);
    }

    #[test]
    fn blocking_limits() {
        for k in 1..=3 {
            let p0 = params(0.0, 5, k);
            let d = stationary_numeric(&build_transition_matrix(&p0)).unwrap();
            assert_eq!(expected_blocked(&p0, &d), 0.0);
            let p1 = params(1.0, 5, k);
            let d = stationary_numeric(&build_transition_matrix(&p1)).unwrap();
            assert_eq!(expected_blocked(&p1, &d), 5.0);
        }
    }

    #[test]
    fn blocking_is_bounded_by_m() {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            for k in 1..=4 {
                let prm = params(p, 3, k);
                let d = stationary_numeric(&build_transition_matrix(&prm)).unwrap();
                let b = expected_blocked(&prm, &d);
                assert!((0.0..=3.0 + 1e-12).contains(&b), "B = {b}");
            }
        }
    }
}
