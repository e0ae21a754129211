//! Buffer occupancy and arrival blocking of a stop-and-wait request/response
//! client that retransmits on timeout.
//!
//! [`chain`] holds the embedded Markov chain observed after each timeout or
//! first arrival into an empty buffer: transition matrix, closed-form and
//! numeric stationary distributions, mean occupancy `S` and mean blocked
//! arrivals `B`. [`sim`] reproduces the same process by Monte-Carlo, on a
//! virtual clock, or from a scripted outcome sequence.

pub mod chain;
pub mod error;
pub mod params;
pub mod sim;

pub use error::{ModelError, SimError};
pub use params::{ModelParams, Timing};
