//! Reward functions for the three worlds.

use super::config::Scenario;
use super::world::{distance, is_collision, EntityKind, WorldState};

pub const TAG_REWARD: f64 = 10.0;
pub const COLLISION_PENALTY: f64 = 1.0;

pub(crate) fn compute_rewards(state: &WorldState, scenario: Scenario) -> Vec<f64> {
    match scenario {
        Scenario::Spread => compute_spread_reward(state),
        Scenario::Tag => compute_tag_reward(state),
        Scenario::Adversary => compute_adversary_reward(state),
    }
}

/// Shared `−Σ_landmarks min_agents dist`, plus `−1` per other agent an agent overlaps.
pub fn compute_spread_reward(state: &WorldState) -> Vec<f64> {
    let agents = state.agents();
    let shared: f64 = -state
        .landmarks()
        .iter()
        .map(|l| agents.iter().map(|a| distance(a.pos, l.pos)).fold(f64::INFINITY, f64::min))
        .sum::<f64>();
    agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let hits = agents
                .iter()
                .enumerate()
                .filter(|&(j, b)| j != i && is_collision(a, b))
                .count();
            shared - COLLISION_PENALTY * hits as f64
        })
        .collect()
}

/// Penalty for a good agent straying from the arena, per axis.
pub fn boundary_penalty(z: f64) -> f64 {
    if z < 0.9 {
        0.0
    } else if z < 1.0 {
        (z - 0.9) * 10.0
    } else {
        (2.0 * z - 2.0).exp().min(10.0)
    }
}

/// Number of (good agent, adversary) pairs currently in contact.
pub fn count_tag_events(state: &WorldState) -> usize {
    let agents = state.agents();
    agents
        .iter()
        .filter(|g| g.kind == EntityKind::GoodAgent)
        .map(|g| {
            agents
                .iter()
                .filter(|a| a.kind == EntityKind::Adversary && is_collision(g, a))
                .count()
        })
        .sum()
}

/// Each tag costs the tagged good agent 10 and pays every adversary 10.
/// Good agents additionally pay the boundary penalty on both axes.
pub fn compute_tag_reward(state: &WorldState) -> Vec<f64> {
    let agents = state.agents();
    let events = count_tag_events(state) as f64;
    agents
        .iter()
        .map(|me| match me.kind {
            EntityKind::Adversary => TAG_REWARD * events,
            _ => {
                let tagged = agents
                    .iter()
                    .filter(|a| a.kind == EntityKind::Adversary && is_collision(me, a))
                    .count();
                -TAG_REWARD * tagged as f64
                    - boundary_penalty(me.pos[0].abs())
                    - boundary_penalty(me.pos[1].abs())
            }
        })
        .collect()
}

/// Good agents: `−min_good dist(target) + dist(adversary, target)`, shared.
/// Adversary: `−dist(adversary, target)`.
pub fn compute_adversary_reward(state: &WorldState) -> Vec<f64> {
    let Some(target) = state.target else {
        return vec![0.0; state.n_agents];
    };
    let goal = state.entities[target].pos;
    let agents = state.agents();
    let closest_good = agents
        .iter()
        .filter(|a| a.kind == EntityKind::GoodAgent)
        .map(|a| distance(a.pos, goal))
        .fold(f64::INFINITY, f64::min);
    let adversary_dist: f64 = agents
        .iter()
        .filter(|a| a.kind == EntityKind::Adversary)
        .map(|a| distance(a.pos, goal))
        .sum();
    agents
        .iter()
        .map(|a| match a.kind {
            EntityKind::Adversary => -distance(a.pos, goal),
            _ => -closest_good + adversary_dist,
        })
        .collect()
}
