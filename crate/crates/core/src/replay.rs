//! Fixed-capacity experience replay with uniform sampling.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

pub const DEFAULT_CAPACITY: usize = 10_000;

/// Actions of the classification task.
pub const NORMAL: u8 = 0;
pub const FAILURE: u8 = 1;

/// One `(state, action, reward, next_state)` observation plus terminal flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub state: Vec<T>,
    pub action: u8,
    pub reward: T,
    pub next_state: Vec<T>,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    feature_dim: usize,
    storage: Vec<Transition<T>>,
    write_index: usize,
    rng: seed::Rng,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(capacity: usize, feature_dim: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            feature_dim,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            write_index: 0,
            rng: seed::rng(seed, "replay"),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn is_ready(&self, batch_size: usize) -> bool {
        batch_size >= 1 && self.storage.len() >= batch_size
    }

    fn validate(&self, t: &Transition<T>) -> Result<()> {
        if t.action > FAILURE {
            return Err(Error::invalid(format!("action {} is not 0 or 1", t.action)));
        }
        if !t.reward.is_finite() {
            return Err(Error::invalid("non-finite reward"));
        }
        if t.state.len() != self.feature_dim || t.next_state.len() != self.feature_dim {
            return Err(Error::invalid(format!(
                "state lengths {}/{} do not match feature count {}",
                t.state.len(),
                t.next_state.len(),
                self.feature_dim
            )));
        }
        Ok(())
    }

    /// Stores `t`, evicting the oldest entry once full.
    pub fn push(&mut self, t: Transition<T>) -> Result<()> {
        self.validate(&t)?;
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.write_index] = t;
        }
        self.write_index = (self.write_index + 1) % self.capacity;
        Ok(())
    }

    /// Uniform draw with replacement.
    pub fn sample(&mut self, batch_size: usize) -> Result<Vec<Transition<T>>> {
        if batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if self.storage.len() < batch_size {
            return Err(Error::NotReady {
                size: self.storage.len(),
                batch_size,
            });
        }
        let n = self.storage.len();
        Ok((0..batch_size)
            .map(|_| self.storage[self.rng.random_range(0..n)].clone())
            .collect())
    }

    /// Stored transitions from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &Transition<T>> {
        let split = if self.storage.len() < self.capacity { 0 } else { self.write_index };
        self.storage[split..].iter().chain(&self.storage[..split])
    }
}
