//! Experience replay.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::AgentError;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// FIFO ring of transitions with uniform with-replacement sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 20)),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }
}

/// Append a transition, evicting the oldest at capacity.
pub fn replay_add(buffer: &mut ReplayBuffer, transition: Transition) {
    if buffer.items.len() == buffer.capacity {
        buffer.items.pop_front();
    }
    buffer.items.push_back(transition);
}

/// Uniform sample with replacement. Requires at least `batch_size` stored
/// items.
pub fn replay_sample<'a>(
    buffer: &'a ReplayBuffer,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<&'a Transition>, AgentError> {
    if buffer.len() < batch_size {
        return Err(AgentError::BufferUnderfilled {
            have: buffer.len(),
            need: batch_size,
        });
    }
    Ok((0..batch_size)
        .map(|_| &buffer.items[rng.gen_range(0..buffer.items.len())])
        .collect())
}
