use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Which particle world to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Cooperative navigation: N agents cover N landmarks.
    Spread,
    /// Predator-prey: slower adversaries chase faster good agents around obstacles.
    Tag,
    /// One adversary tries to find a target landmark that N good agents guard.
    Adversary,
}

impl std::str::FromStr for Scenario {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spread" | "simple_spread" => Ok(Scenario::Spread),
            "tag" | "simple_tag" => Ok(Scenario::Tag),
            "adversary" | "simple_adversary" => Ok(Scenario::Adversary),
            other => Err(config_err(format!("unknown environment '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Spread => "spread",
            Scenario::Tag => "tag",
            Scenario::Adversary => "adversary",
        })
    }
}

/// Integration and contact constants shared by every entity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsConfig {
    pub dt: f64,
    /// Fraction of velocity removed each step before forces are applied.
    pub damping: f64,
    /// Stiffness of the penalty force between overlapping entities.
    pub contact_force: f64,
    /// Softening length of the contact onset.
    pub contact_margin: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig { dt: 0.1, damping: 0.25, contact_force: 100.0, contact_margin: 1e-3 }
    }
}

/// Per-kind body parameters for controllable agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentBody {
    pub radius: f64,
    /// Multiplier from the net action to the applied force.
    pub sensitivity: f64,
    pub max_speed: Option<f64>,
    pub collide: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub scenario: Scenario,
    pub n_good: usize,
    pub n_adversaries: usize,
    /// Landmarks (spread, adversary) or obstacles (tag).
    pub n_landmarks: usize,
    pub physics: PhysicsConfig,
    pub good: AgentBody,
    pub adversary: AgentBody,
    pub landmark_radius: f64,
    pub landmarks_collide: bool,
    /// Landmarks are placed uniformly in `[-extent, extent]²`.
    pub landmark_extent: f64,
    pub episode_length: usize,
    pub seed: u64,
}

impl EnvConfig {
    /// Cooperative navigation with `n` agents and `n` landmarks.
    pub fn spread(n: usize) -> Self {
        EnvConfig {
            scenario: Scenario::Spread,
            n_good: n,
            n_adversaries: 0,
            n_landmarks: n,
            physics: PhysicsConfig::default(),
            good: AgentBody { radius: 0.05, sensitivity: 5.0, max_speed: None, collide: true },
            adversary: AgentBody { radius: 0.075, sensitivity: 5.0, max_speed: None, collide: true },
            landmark_radius: 0.15,
            landmarks_collide: false,
            landmark_extent: 1.0,
            episode_length: 25,
            seed: 0,
        }
    }

    /// Predator-prey with two static obstacles.
    pub fn tag(n_good: usize, n_adversaries: usize) -> Self {
        EnvConfig {
            scenario: Scenario::Tag,
            n_good,
            n_adversaries,
            n_landmarks: 2,
            physics: PhysicsConfig::default(),
            good: AgentBody { radius: 0.05, sensitivity: 4.0, max_speed: Some(1.3), collide: true },
            adversary: AgentBody { radius: 0.075, sensitivity: 3.0, max_speed: Some(1.0), collide: true },
            landmark_radius: 0.2,
            landmarks_collide: true,
            landmark_extent: 0.9,
            episode_length: 25,
            seed: 0,
        }
    }

    /// One adversary, `n` good agents and `n` landmarks, one of them the target.
    pub fn adversary(n: usize) -> Self {
        EnvConfig {
            scenario: Scenario::Adversary,
            n_good: n,
            n_adversaries: 1,
            n_landmarks: n,
            physics: PhysicsConfig::default(),
            good: AgentBody { radius: 0.05, sensitivity: 5.0, max_speed: None, collide: false },
            adversary: AgentBody { radius: 0.05, sensitivity: 5.0, max_speed: None, collide: false },
            landmark_radius: 0.08,
            landmarks_collide: false,
            landmark_extent: 1.0,
            episode_length: 25,
            seed: 0,
        }
    }

    /// Default layout for a scenario sized by `n`: agents for spread, good
    /// agents for adversary, and good agents (with three adversaries) for tag.
    pub fn for_scenario(scenario: Scenario, n: usize) -> Self {
        match scenario {
            Scenario::Spread => Self::spread(n),
            Scenario::Tag => Self::tag(n, 3),
            Scenario::Adversary => Self::adversary(n),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_good + self.n_adversaries
    }

    pub fn validate(&self) -> Result<()> {
        if self.episode_length == 0 {
            return Err(config_err("episode length must be positive"));
        }
        if self.n_agents() == 0 {
            return Err(config_err("the world needs at least one agent"));
        }
        let p = &self.physics;
        if !(p.dt > 0.0) || !(0.0..=1.0).contains(&p.damping) || !(p.contact_margin > 0.0) {
            return Err(config_err("invalid physics constants"));
        }
        for body in [&self.good, &self.adversary] {
            if !(body.radius > 0.0) || body.max_speed.is_some_and(|s| !(s > 0.0)) {
                return Err(config_err("agent radius and max speed must be positive"));
            }
        }
        match self.scenario {
            Scenario::Spread if self.n_adversaries != 0 => {
                Err(config_err("spread has no adversaries"))
            }
            Scenario::Spread if self.n_landmarks == 0 => Err(config_err("spread needs landmarks")),
            Scenario::Adversary if self.n_adversaries != 1 => {
                Err(config_err("the adversary environment has exactly one adversary"))
            }
            Scenario::Adversary if self.n_landmarks == 0 || self.n_good == 0 => {
                Err(config_err("the adversary environment needs good agents and landmarks"))
            }
            Scenario::Tag if self.n_good == 0 || self.n_adversaries == 0 => {
                Err(config_err("tag needs at least one good agent and one adversary"))
            }
            _ => Ok(()),
        }
    }
}
