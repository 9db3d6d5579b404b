//! Multi-agent deterministic policy gradient learners on 2-D particle worlds.
//!
//! Three learners share one code path and differ only in how each agent's
//! critic input is assembled:
//!
//! - independent DDPG: the critic sees the agent's own observation and action;
//! - MADDPG: the critic sees every agent's observation and action;
//! - MADDPG-K: the critic sees the agent itself plus its `K` nearest agents,
//!   sorted nearest-first, so the critic width no longer depends on the
//!   number of agents.
//!
//! The crate also carries the particle environments (`spread`, `tag`,
//! `adversary`), a replay buffer that stores neighbour index sets with each
//! transition, and an experiment harness with CSV logging and a wall-clock
//! scaling benchmark.

// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod env;
pub mod error;
pub mod harness;
pub mod neighborhood;
pub mod nn;
pub mod replay;

pub use error::{Error, Result};
