//! Per-agent observation layouts, in fixed entity order:
//!
//! - spread: `[vel, pos, landmark offsets.., other-agent offsets..]`
//! - tag: `[vel, pos, obstacle offsets.., other-agent offsets.., other good agents' velocities..]`
//! - adversary, good agents: `[vel, pos, target offset, landmark offsets.., other-agent offsets..]`
//! - adversary, the adversary: same without the target offset.
//!
//! Offsets are `other.pos − self.pos`.

use super::world::{EntityKind, WorldState};

fn offset(from: [f64; 2], to: [f64; 2]) -> [f64; 2] {
    [to[0] - from[0], to[1] - from[1]]
}

pub(crate) fn observe(state: &WorldState, agent: usize) -> Vec<f64> {
    let me = &state.entities[agent];
    let mut obs = Vec::with_capacity(4 + 2 * state.entities.len() + 2);
    obs.extend_from_slice(&me.vel);
    obs.extend_from_slice(&me.pos);

    if me.kind == EntityKind::GoodAgent {
        if let Some(t) = state.target {
            obs.extend_from_slice(&offset(me.pos, state.entities[t].pos));
        }
    }
    for l in state.landmarks() {
        obs.extend_from_slice(&offset(me.pos, l.pos));
    }
    for (j, other) in state.agents().iter().enumerate() {
        if j != agent {
            obs.extend_from_slice(&offset(me.pos, other.pos));
        }
    }
    let is_tag = state.landmarks().iter().any(|l| l.kind == EntityKind::Obstacle);
    if is_tag {
        for (j, other) in state.agents().iter().enumerate() {
            if j != agent && other.kind == EntityKind::GoodAgent {
                obs.extend_from_slice(&other.vel);
            }
        }
    }
    obs
}
