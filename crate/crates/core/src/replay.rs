//! Fixed-capacity FIFO store of joint transitions with uniform sampling.

use std::collections::VecDeque;

use rand::Rng;

use crate::env::Action;
use crate::error::{Error, Result};
use crate::neighborhood::IndexSet;

/// Neighbour index sets for the current and next state of one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSets {
    pub current: Vec<IndexSet>,
    pub next: Vec<IndexSet>,
}

impl NeighborSets {
    /// Total number of stored agent indices (`2·n·K` for a uniform `K`).
    pub fn entry_count(&self) -> usize {
        self.current.iter().chain(&self.next).map(IndexSet::len).sum()
    }
}

/// One step of joint experience for all `n` agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    pub next_observations: Vec<Vec<f64>>,
    pub neighbors: Option<NeighborSets>,
}

impl Transition {
    pub fn n_agents(&self) -> usize {
        self.observations.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.observations.len();
        if self.actions.len() != n || self.rewards.len() != n || self.next_observations.len() != n {
            return Err(Error::Contract("transition fields disagree on the agent count".into()));
        }
        if let Some(sets) = &self.neighbors {
            if sets.current.len() != n || sets.next.len() != n {
                return Err(Error::Contract("index sets must cover every agent".into()));
            }
            for (i, (c, x)) in sets.current.iter().zip(&sets.next).enumerate() {
                c.validate(i, n, c.len())?;
                x.validate(i, n, x.len())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: VecDeque<Transition>,
    pushed: u64,
}

pub const DEFAULT_CAPACITY: usize = 100_000;

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            storage: VecDeque::with_capacity(capacity.min(1 << 16)),
            pushed: 0,
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

    /// Transitions pushed since construction, including evicted ones.
    pub fn total_pushed(&self) -> u64 {
        self.pushed
    }

    /// Appends a transition, evicting the oldest one when full.
    pub fn push(&mut self, transition: Transition) {
        if self.storage.len() == self.capacity {
            self.storage.pop_front();
        }
        self.storage.push_back(transition);
        self.pushed += 1;
    }

    /// Stored transitions, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.storage.get(i)
    }

    /// Draws `batch_size` transitions uniformly with replacement, or `None`
    /// while fewer than `batch_size` transitions are stored.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if batch_size == 0 || self.storage.len() < batch_size {
            return None;
        }
        let n = self.storage.len();
        Some((0..batch_size).map(|_| &self.storage[rng.random_range(0..n)]).collect())
    }
}
