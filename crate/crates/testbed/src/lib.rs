//! Loopback HTTP testbed: an acknowledgement server with link-loss emulation
//! and a stop-and-wait client with a bounded FIFO buffer.

pub mod buffer;
pub mod client;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fault;
pub mod http;
pub mod message;
pub mod server;

pub use buffer::ClientBuffer;
pub use client::{
    client_run, measure_drain_time, BatchSums, ClientConfig, DrainSample, TestbedObservation,
    TestbedReport,
};
pub use config::TestbedConfig;
pub use error::TestbedError;
pub use experiment::{
    check_invariants, run_experiment, run_pooled, ExperimentOutcome, InvariantReport, PooledOutcome,
};
pub use fault::{FaultSchedule, InjectionSide};
pub use message::{FrameBuilder, Message};
pub use server::{serve, ServerConfig, ServerEvent, ServerHandle, ServerLog};
