use std::collections::VecDeque;

use crate::message::Message;

/// Bounded FIFO of messages awaiting acknowledgement.
#[derive(Debug)]
pub struct ClientBuffer {
    entries: VecDeque<Message>,
    capacity: usize,
}

impl ClientBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    /// Appends at the tail, or hands the message back when the buffer is full.
    pub fn push(&mut self, message: Message) -> Result<(), Message> {
        if self.entries.len() >= self.capacity {
            return Err(message);
        }
        self.entries.push_back(message);
        Ok(())
    }

    pub fn head(&self) -> Option<&Message> {
        self.entries.front()
    }

    /// Removes the head once its acknowledgement for `id` is in.
    pub fn acknowledge(&mut self, id: u64) -> Option<Message> {
        match self.entries.front() {
            Some(head) if head.id == id => self.entries.pop_front(),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|m| m.id)
    }
}
