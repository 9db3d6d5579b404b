use serde::{Deserialize, Serialize};

use crate::env::EntityKind;
use crate::error::{config_err, Result};
use crate::neighborhood::MetricId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Independent learners: each critic sees only its own observation and action.
    Ddpg,
    /// Centralised critics over every agent's observation and action.
    Maddpg,
    /// Critics over the agent itself and its `K` nearest agents.
    MaddpgK,
}

impl std::str::FromStr for Algorithm {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ddpg" => Ok(Algorithm::Ddpg),
            "maddpg" => Ok(Algorithm::Maddpg),
            "maddpg_k" | "maddpg-k" => Ok(Algorithm::MaddpgK),
            other => Err(config_err(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Ddpg => "ddpg",
            Algorithm::Maddpg => "maddpg",
            Algorithm::MaddpgK => "maddpg_k",
        })
    }
}

/// Number of neighbours (excluding the agent itself) per agent kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KPerKind {
    pub good: usize,
    pub adversary: usize,
}

impl KPerKind {
    pub fn uniform(k: usize) -> Self {
        KPerKind { good: k, adversary: k }
    }

    pub fn for_kind(&self, kind: EntityKind) -> usize {
        match kind {
            EntityKind::Adversary => self.adversary,
            _ => self.good,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoConfig {
    pub algorithm: Algorithm,
    pub k: KPerKind,
    pub metric: MetricId,
    pub gamma: f64,
    pub tau: f64,
    pub learning_rate: f64,
    /// Hidden layer widths shared by actors and critics.
    pub hidden: Vec<usize>,
    /// Std of the Gaussian noise added to actor outputs once learning has started.
    pub noise_std: f64,
    pub clip_norm: f64,
    /// Weight of the mean squared actor output pre-activation subtracted from
    /// the actor objective. Keeps the logistic outputs out of saturation.
    pub actor_preact_reg: f64,
    /// Observation entries per MADDPG-K critic slot. `None` uses the widest
    /// agent observation, zero-padding narrower ones.
    pub critic_slot_obs: Option<usize>,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        AlgoConfig {
            algorithm: Algorithm::MaddpgK,
            k: KPerKind::uniform(2),
            metric: MetricId::Euclidean,
            gamma: 0.95,
            tau: 0.01,
            learning_rate: 0.01,
            hidden: vec![64, 64],
            noise_std: 0.1,
            clip_norm: 0.5,
            actor_preact_reg: 1e-3,
            critic_slot_obs: None,
        }
    }
}

impl AlgoConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        AlgoConfig { algorithm, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(config_err(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(config_err(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(config_err("learning rate must be positive"));
        }
        if !(self.noise_std >= 0.0) || !(self.clip_norm > 0.0) {
            return Err(config_err("noise std must be nonnegative and clip norm positive"));
        }
        if !(self.actor_preact_reg >= 0.0) {
            return Err(config_err("actor pre-activation penalty must be nonnegative"));
        }
        if self.hidden.contains(&0) {
            return Err(config_err("hidden widths must be positive"));
        }
        if self.critic_slot_obs == Some(0) {
            return Err(config_err("critic slot observation width must be positive"));
        }
        Ok(())
    }
}
