//! Independent DDPG, MADDPG and MADDPG-K learners.
//!
//! All three share actors, target networks, exploration and update rules;
//! only the critic input layout differs (see [`CriticLayout`]).

mod config;
mod critic_input;
mod learner;

pub use config::{AlgoConfig, Algorithm, KPerKind};
pub use critic_input::{current_inputs, next_inputs, CriticBatch, CriticLayout};
pub use learner::{AgentLearner, MultiAgent, Phase, UpdateStats};
