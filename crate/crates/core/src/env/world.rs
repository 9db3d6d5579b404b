use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{AgentBody, EnvConfig, Scenario};
use super::reward;
use crate::error::{Error, Result};

/// Length of every action vector: `(no-op, +x, −x, +y, −y)`.
pub const ACTION_DIM: usize = 5;

pub type Action = [f64; ACTION_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    GoodAgent,
    Adversary,
    Landmark,
    Obstacle,
}

impl EntityKind {
    pub fn is_agent(self) -> bool {
        matches!(self, EntityKind::GoodAgent | EntityKind::Adversary)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub kind: EntityKind,
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub radius: f64,
    pub movable: bool,
    pub collide: bool,
    pub sensitivity: f64,
    pub max_speed: Option<f64>,
}

/// Full simulator state. Agents come first (adversaries before good agents),
/// followed by landmarks or obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub entities: Vec<Entity>,
    pub n_agents: usize,
    pub step: usize,
    /// Index (into `entities`) of the target landmark in the adversary world.
    pub target: Option<usize>,
}

impl WorldState {
    pub fn agents(&self) -> &[Entity] {
        &self.entities[..self.n_agents]
    }

    pub fn landmarks(&self) -> &[Entity] {
        &self.entities[self.n_agents..]
    }

    /// Positions of the controllable agents, in agent order.
    pub fn agent_positions(&self) -> Vec<[f64; 2]> {
        self.agents().iter().map(|e| e.pos).collect()
    }
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Center distance strictly below the sum of radii.
pub fn is_collision(a: &Entity, b: &Entity) -> bool {
    distance(a.pos, b.pos) < a.radius + b.radius
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observations: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    /// True exactly when the step counter reaches the episode length.
    pub done: bool,
}

/// A seedable particle world.
#[derive(Debug, Clone)]
pub struct ParticleEnv {
    config: EnvConfig,
    state: WorldState,
}

fn agent_entity(kind: EntityKind, body: &AgentBody, pos: [f64; 2]) -> Entity {
    Entity {
        kind,
        pos,
        vel: [0.0; 2],
        radius: body.radius,
        movable: true,
        collide: body.collide,
        sensitivity: body.sensitivity,
        max_speed: body.max_speed,
    }
}

fn uniform_point(rng: &mut impl Rng, extent: f64) -> [f64; 2] {
    [rng.random_range(-extent..extent), rng.random_range(-extent..extent)]
}

impl ParticleEnv {
    /// Builds the world and places it at `reset(config.seed)`.
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let state = Self::initial_state(&config, config.seed);
        Ok(ParticleEnv { config, state })
    }

    fn initial_state(config: &EnvConfig, seed: u64) -> WorldState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entities = Vec::with_capacity(config.n_agents() + config.n_landmarks);
        for _ in 0..config.n_adversaries {
            entities.push(agent_entity(EntityKind::Adversary, &config.adversary, uniform_point(&mut rng, 1.0)));
        }
        for _ in 0..config.n_good {
            entities.push(agent_entity(EntityKind::GoodAgent, &config.good, uniform_point(&mut rng, 1.0)));
        }
        let landmark_kind = match config.scenario {
            Scenario::Tag => EntityKind::Obstacle,
            _ => EntityKind::Landmark,
        };
        for _ in 0..config.n_landmarks {
            entities.push(Entity {
                kind: landmark_kind,
                pos: uniform_point(&mut rng, config.landmark_extent),
                vel: [0.0; 2],
                radius: config.landmark_radius,
                movable: false,
                collide: config.landmarks_collide,
                sensitivity: 0.0,
                max_speed: None,
            });
        }
        let n_agents = config.n_agents();
        let target = match config.scenario {
            Scenario::Adversary => Some(n_agents + rng.random_range(0..config.n_landmarks)),
            _ => None,
        };
        WorldState { entities, n_agents, step: 0, target }
    }

    /// Re-places every entity from `seed` and returns the first observations.
    pub fn reset(&mut self, seed: u64) -> Vec<Vec<f64>> {
        self.state = Self::initial_state(&self.config, seed);
        self.observations()
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    /// Replaces the state wholesale (scripted scenarios and tests).
    pub fn set_state(&mut self, state: WorldState) {
        self.state = state;
    }

    pub fn n_agents(&self) -> usize {
        self.state.n_agents
    }

    pub fn agent_positions(&self) -> Vec<[f64; 2]> {
        self.state.agent_positions()
    }

    pub fn agent_kinds(&self) -> Vec<EntityKind> {
        self.state.agents().iter().map(|e| e.kind).collect()
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.n_agents()).map(|i| super::observation::observe(&self.state, i)).collect()
    }

    /// Observation length for every agent, in agent order.
    pub fn observation_dims(&self) -> Vec<usize> {
        self.observations().iter().map(Vec::len).collect()
    }

    /// Advances the world by one step under `actions` (one per agent).
    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutcome> {
        if actions.len() != self.n_agents() {
            return Err(Error::Contract(format!(
                "{} actions for {} agents",
                actions.len(),
                self.n_agents()
            )));
        }
        if let Some(bad) = actions.iter().flatten().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Contract(format!("action component {bad} outside [0, 1]")));
        }
        integrate(&mut self.state, &self.config, actions);
        self.state.step += 1;
        let rewards = reward::compute_rewards(&self.state, self.config.scenario);
        Ok(StepOutcome {
            observations: self.observations(),
            rewards,
            done: self.state.step >= self.config.episode_length,
        })
    }
}

/// Checks an action slice has the right arity; convenience for callers that
/// hold actions as plain vectors.
pub fn to_action(v: &[f64]) -> Result<Action> {
    v.try_into()
        .map_err(|_| Error::Contract(format!("action has length {}, expected {ACTION_DIM}", v.len())))
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Contact force acting on `a` due to `b` (the force on `b` is its negation).
fn contact_force(a: &Entity, b: &Entity, stiffness: f64, margin: f64) -> Option<[f64; 2]> {
    if !a.collide || !b.collide {
        return None;
    }
    let delta = [a.pos[0] - b.pos[0], a.pos[1] - b.pos[1]];
    let dist = delta[0].hypot(delta[1]);
    if dist == 0.0 {
        return None;
    }
    let penetration = softplus(-(dist - (a.radius + b.radius)) / margin) * margin;
    let scale = stiffness * penetration / dist;
    Some([scale * delta[0], scale * delta[1]])
}

fn integrate(state: &mut WorldState, config: &EnvConfig, actions: &[Action]) {
    let physics = &config.physics;
    let n = state.entities.len();
    let mut force = vec![[0.0f64; 2]; n];

    for (i, a) in actions.iter().enumerate() {
        let s = state.entities[i].sensitivity;
        force[i] = [s * (a[1] - a[2]), s * (a[3] - a[4])];
    }

    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&state.entities[i], &state.entities[j]);
            if let Some(f) = contact_force(a, b, physics.contact_force, physics.contact_margin) {
                if a.movable {
                    force[i][0] += f[0];
                    force[i][1] += f[1];
                }
                if b.movable {
                    force[j][0] -= f[0];
                    force[j][1] -= f[1];
                }
            }
        }
    }

    let keep = 1.0 - physics.damping;
    for (e, f) in state.entities.iter_mut().zip(&force) {
        if !e.movable {
            continue;
        }
        // Unit mass.
        e.vel[0] = e.vel[0] * keep + f[0] * physics.dt;
        e.vel[1] = e.vel[1] * keep + f[1] * physics.dt;
        if let Some(max) = e.max_speed {
            let speed = e.vel[0].hypot(e.vel[1]);
            if speed > max {
                let scale = max / speed;
                e.vel = [e.vel[0] * scale, e.vel[1] * scale];
                while e.vel[0].hypot(e.vel[1]) > max {
                    e.vel = [e.vel[0] * (1.0 - f64::EPSILON), e.vel[1] * (1.0 - f64::EPSILON)];
                }
            }
        }
        e.pos[0] += e.vel[0] * physics.dt;
        e.pos[1] += e.vel[1] * physics.dt;
    }
}
