//! Embedded Markov chain of the client buffer, sampled at observation instants.

mod balance;
mod closed;
mod distribution;
mod matrix;
mod metrics;
mod numeric;
mod space;

pub use balance::{balance_residuals, BalanceEquation, BalanceResiduals, Residual};
pub use closed::{
    expected_buffer_size_closed, stationary_closed, stationary_closed_k1, stationary_closed_k2,
};
pub use distribution::{SolveMethod, StationaryDistribution};
pub use matrix::{build_transition_matrix, epoch_outcomes, EpochOutcome, TransitionMatrix};
pub use metrics::{expected_blocked, expected_buffer_size, ChainMetrics};
pub use numeric::stationary_numeric;
pub use space::{state_space, StateSpace};

use crate::error::ModelError;
use crate::params::ModelParams;

/// Closed form for `k ≤ 2`, numeric solve otherwise.
pub fn stationary(params: &ModelParams) -> Result<StationaryDistribution, ModelError> {
    match params.k() {
        1 | 2 => stationary_closed(params),
        _ => stationary_numeric(&build_transition_matrix(params)),
    }
}
