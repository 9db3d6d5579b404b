//! Seedable 2-D particle worlds: cooperative navigation (`spread`),
//! predator-prey (`tag`) and physical deception (`adversary`).

mod config;
mod observation;
mod reward;
mod trajectory;
mod world;

pub use config::{AgentBody, EnvConfig, PhysicsConfig, Scenario};
pub use reward::{
    boundary_penalty, compute_adversary_reward, compute_spread_reward, compute_tag_reward,
    count_tag_events,
};
pub use trajectory::TrajectoryWriter;
pub use world::{
    distance, is_collision, to_action, Action, Entity, EntityKind, ParticleEnv, StepOutcome,
    WorldState, ACTION_DIM,
};
