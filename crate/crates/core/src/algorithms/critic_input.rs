//! Assembly of batched critic inputs for the three algorithms.

use ndarray::Array2;

use crate::env::ACTION_DIM;
use crate::error::{Error, Result};
use crate::neighborhood::SlotOrder;
use crate::nn::Mlp;
use crate::replay::Transition;

/// How one agent's critic input is laid out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CriticLayout {
    /// `[o_i, a_i]`.
    Own { agent: usize, obs_dim: usize },
    /// `[o_1, a_1, ..., o_n, a_n]` in agent order, each observation at its own width.
    Joint { agent: usize, obs_dims: Vec<usize> },
    /// The agent and its `k` neighbours in fixed-width slots.
    Neighborhood { agent: usize, k: usize, slot_obs: usize, order: SlotOrder },
}

impl CriticLayout {
    pub fn agent(&self) -> usize {
        match *self {
            CriticLayout::Own { agent, .. }
            | CriticLayout::Joint { agent, .. }
            | CriticLayout::Neighborhood { agent, .. } => agent,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            CriticLayout::Own { obs_dim, .. } => obs_dim + ACTION_DIM,
            CriticLayout::Joint { obs_dims, .. } => obs_dims.iter().map(|o| o + ACTION_DIM).sum(),
            CriticLayout::Neighborhood { k, slot_obs, .. } => (k + 1) * (slot_obs + ACTION_DIM),
        }
    }

    /// Agents occupying the slots of this transition's critic input, in order.
    fn slots(&self, t: &Transition, next: bool) -> Result<Vec<usize>> {
        match self {
            CriticLayout::Own { agent, .. } => Ok(vec![*agent]),
            CriticLayout::Joint { obs_dims, .. } => Ok((0..obs_dims.len()).collect()),
            CriticLayout::Neighborhood { agent, k, order, .. } => {
                let sets = t.neighbors.as_ref().ok_or_else(|| {
                    Error::Contract("MADDPG-K needs index sets stored with every transition".into())
                })?;
                let set = if next { &sets.next[*agent] } else { &sets.current[*agent] };
                if set.len() != *k {
                    return Err(Error::Contract(format!(
                        "stored index set of agent {agent} has {} entries, critic expects {k}",
                        set.len()
                    )));
                }
                Ok(set.slots(*agent, *order))
            }
        }
    }

    fn slot_obs_width(&self, j: usize) -> usize {
        match self {
            CriticLayout::Own { obs_dim, .. } => *obs_dim,
            CriticLayout::Joint { obs_dims, .. } => obs_dims[j],
            CriticLayout::Neighborhood { slot_obs, .. } => *slot_obs,
        }
    }
}

/// A batch of critic inputs plus where the owning agent's action sits in each row.
#[derive(Debug, Clone)]
pub struct CriticBatch {
    pub input: Array2<f64>,
    /// Column of the owner's first action entry, per row.
    pub own_action_col: Vec<usize>,
}

impl CriticBatch {
    /// The common own-action column when every row agrees.
    pub fn uniform_own_action_col(&self) -> Option<usize> {
        let first = *self.own_action_col.first()?;
        self.own_action_col.iter().all(|&c| c == first).then_some(first)
    }
}

fn write_slot(obs: &[f64], obs_width: usize, action: &[f64], out: &mut [f64]) {
    let m = obs.len().min(obs_width);
    out[..m].copy_from_slice(&obs[..m]);
    out[m..obs_width].fill(0.0);
    out[obs_width..obs_width + ACTION_DIM].copy_from_slice(action);
}

/// Critic inputs for the current state, using the actions stored in the batch.
pub fn current_inputs(layout: &CriticLayout, batch: &[&Transition]) -> Result<CriticBatch> {
    let width = layout.width();
    let owner = layout.agent();
    let mut input = Array2::zeros((batch.len(), width));
    let mut own_action_col = Vec::with_capacity(batch.len());
    for (mut row, t) in input.rows_mut().into_iter().zip(batch) {
        let row = row.as_slice_mut().expect("standard layout");
        let mut col = 0;
        let mut own = None;
        for j in layout.slots(t, false)? {
            let w = layout.slot_obs_width(j);
            write_slot(&t.observations[j], w, &t.actions[j], &mut row[col..col + w + ACTION_DIM]);
            if j == owner {
                own = Some(col + w);
            }
            col += w + ACTION_DIM;
        }
        if col != width {
            return Err(Error::Contract(format!("critic row filled {col} of {width} columns")));
        }
        own_action_col.push(own.expect("owner always occupies a slot"));
    }
    Ok(CriticBatch { input, own_action_col })
}

/// Critic inputs for the next state, each included agent acting through its
/// target actor. Target actors only run on the (row, agent) pairs a slot needs.
pub fn next_inputs(layout: &CriticLayout, batch: &[&Transition], target_actors: &[&Mlp]) -> Result<Array2<f64>> {
    let width = layout.width();
    let n = target_actors.len();
    let slots: Vec<Vec<usize>> = batch.iter().map(|t| layout.slots(t, true)).collect::<Result<_>>()?;

    let mut needed: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (r, row_slots) in slots.iter().enumerate() {
        for &j in row_slots {
            needed[j].push(r);
        }
    }
    let mut target_actions: Vec<Option<Array2<f64>>> = Vec::with_capacity(n);
    for (j, rows) in needed.iter().enumerate() {
        if rows.is_empty() {
            target_actions.push(None);
            continue;
        }
        let dim = batch[rows[0]].next_observations[j].len();
        let mut obs = Array2::zeros((rows.len(), dim));
        for (mut dst, &r) in obs.rows_mut().into_iter().zip(rows) {
            dst.as_slice_mut()
                .expect("standard layout")
                .copy_from_slice(&batch[r].next_observations[j]);
        }
        target_actions.push(Some(target_actors[j].predict_batch(obs)?));
    }

    let mut cursor = vec![0usize; n];
    let mut input = Array2::zeros((batch.len(), width));
    for ((mut row, t), row_slots) in input.rows_mut().into_iter().zip(batch).zip(&slots) {
        let row = row.as_slice_mut().expect("standard layout");
        let mut col = 0;
        for &j in row_slots {
            let w = layout.slot_obs_width(j);
            let actions = target_actions[j].as_ref().expect("computed for every needed agent");
            let action = actions.row(cursor[j]);
            cursor[j] += 1;
            write_slot(
                &t.next_observations[j],
                w,
                action.as_slice().expect("standard layout"),
                &mut row[col..col + w + ACTION_DIM],
            );
            col += w + ACTION_DIM;
        }
    }
    Ok(input)
}
