use std::io;
use std::net::SocketAddr;

use restbuf_core::{ModelError, SimError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TestbedError {
    #[error("server {addr} unreachable: {source}")]
    Unreachable {
        addr: SocketAddr,
        #[source]
        source: io::Error,
    },

    #[error("request headers for message {id} need {needed} bytes, frame size is {frame}")]
    FrameTooSmall {
        id: u64,
        needed: usize,
        frame: usize,
    },

    #[error("invalid testbed config: {0}")]
    Config(String),

    #[error(
        "drain of {messages} messages took {took:?}, not below the arrival interval {interval:?}"
    )]
    SlowDrain {
        messages: usize,
        took: std::time::Duration,
        interval: std::time::Duration,
    },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
