use std::time::Instant;

use crate::error::TestbedError;

/// Default size of one serialized request, headers and body together.
pub const DEFAULT_FRAME_SIZE: usize = 199;

pub const API_PATH: &str = "/api/sensors";

/// Header carrying the message id.
pub const ID_HEADER: &str = "Header";

/// One sensor reading queued at the client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub id: u64,
    /// JSON document sent as the request body.
    pub payload: Vec<u8>,
    pub created_at: Instant,
}

/// Serializes POST requests padded to an exact byte length.
#[derive(Debug, Clone)]
pub struct FrameBuilder {
    host: String,
    frame_size: usize,
    keep_alive: bool,
}

impl FrameBuilder {
    pub fn new(host: impl Into<String>, frame_size: usize) -> Self {
        Self {
            host: host.into(),
            frame_size,
            keep_alive: false,
        }
    }

    pub fn keep_alive(mut self, on: bool) -> Self {
        self.keep_alive = on;
        self
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size
    }

    fn head(&self, id: u64, body_len: usize) -> String {
        let connection = if self.keep_alive {
            "keep-alive"
        } else {
            "close"
        };
        format!(
            "POST {API_PATH} HTTP/1.1\r\nHost: {}\r\n{ID_HEADER}: {id}\r\nContent-Type: application/json\r\nContent-Length: {body_len}\r\nConnection: {connection}\r\n\r\n",
            self.host
        )
    }

    fn body(id: u64, pad: usize) -> String {
        format!(r#"{{"id":{id},"temp":21.5,"pad":"{}"}}"#, "x".repeat(pad))
    }

    /// Builds the message and its wire bytes; the request is exactly `frame_size` long.
    pub fn build(&self, id: u64) -> Result<(Message, Vec<u8>), TestbedError> {
        let bare = Self::body(id, 0).len();
        // Content-Length digits depend on the body length, so settle them first.
        let mut body_len = bare;
        for _ in 0..4 {
            let head = self.head(id, body_len).len();
            body_len = self.frame_size.saturating_sub(head).max(bare);
        }
        let head = self.head(id, body_len);
        let body = Self::body(id, body_len - bare);
        let mut wire = head.into_bytes();
        wire.extend_from_slice(body.as_bytes());
        if wire.len() != self.frame_size {
            return Err(TestbedError::FrameTooSmall {
                id,
                needed: wire.len(),
                frame: self.frame_size,
            });
        }
        let message = Message {
            id,
            payload: body.into_bytes(),
            created_at: Instant::now(),
        };
        Ok((message, wire))
    }
}
