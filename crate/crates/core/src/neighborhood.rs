//! K-nearest-neighbour index sets and proximity-sorted critic inputs.
//!
//! Index sets are computed by brute force: every pairwise distance is
//! evaluated once, then each agent keeps its `K` closest peers ordered
//! nearest-first, ties broken by ascending agent index.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Position = [f64; 2];

pub type DistanceFn = dyn Fn(&Position, &Position) -> f64 + Send + Sync;

/// Distance function between two agent positions.
#[derive(Clone, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// Every pair is equidistant, so the tie rule yields neighbours in
    /// ascending index order. Paired with [`SlotOrder::ByIndex`] this
    /// reproduces the fixed joint layout of a fully centralised critic.
    IndexOrder,
    /// User-supplied metric. Must be nonnegative with `d(p, p) = 0`.
    Custom(Arc<DistanceFn>),
}

impl Metric {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&Position, &Position) -> f64 + Send + Sync + 'static,
    {
        Metric::Custom(Arc::new(f))
    }

    pub fn distance(&self, a: &Position, b: &Position) -> f64 {
        match self {
            Metric::Euclidean => (a[0] - b[0]).hypot(a[1] - b[1]),
            Metric::IndexOrder => 0.0,
            Metric::Custom(f) => f(a, b),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Metric::Custom(_))
    }

    /// Slot ordering that goes with this metric.
    pub fn slot_order(&self) -> SlotOrder {
        match self {
            Metric::IndexOrder => SlotOrder::ByIndex,
            _ => SlotOrder::SelfFirst,
        }
    }
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Euclidean => f.write_str("Euclidean"),
            Metric::IndexOrder => f.write_str("IndexOrder"),
            Metric::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Serializable metric selector used in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    #[default]
    Euclidean,
    IndexOrder,
}

impl From<MetricId> for Metric {
    fn from(id: MetricId) -> Self {
        match id {
            MetricId::Euclidean => Metric::Euclidean,
            MetricId::IndexOrder => Metric::IndexOrder,
        }
    }
}

/// Where the owning agent sits among the critic input slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOrder {
    /// Owner first, then neighbours in index-set order.
    SelfFirst,
    /// Owner and neighbours together, sorted by agent index.
    ByIndex,
}

/// The `K` nearest other agents of one agent, nearest first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet(Vec<u32>);

impl IndexSet {
    pub fn new(indices: Vec<u32>) -> Self {
        IndexSet(indices)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize)
    }

    /// Agent indices in critic-slot order for `owner`.
    pub fn slots(&self, owner: usize, order: SlotOrder) -> Vec<usize> {
        let mut slots = Vec::with_capacity(self.0.len() + 1);
        slots.push(owner);
        slots.extend(self.iter());
        if order == SlotOrder::ByIndex {
            slots.sort_unstable();
        }
        slots
    }

    /// Checks the structural invariants for an index set owned by `owner`
    /// among `n` agents with requested size `k`.
    pub fn validate(&self, owner: usize, n: usize, k: usize) -> Result<()> {
        let expected = k.min(n.saturating_sub(1));
        if self.0.len() != expected {
            return Err(Error::Contract(format!(
                "index set of agent {owner} has {} entries, expected {expected}",
                self.0.len()
            )));
        }
        let mut seen = vec![false; n];
        for j in self.iter() {
            if j == owner || j >= n || std::mem::replace(&mut seen[j], true) {
                return Err(Error::Contract(format!("invalid neighbour {j} for agent {owner}")));
            }
        }
        Ok(())
    }
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Computes every agent's index set.
///
/// `k_per_agent[i]` larger than `n − 1` is clamped with a warning.
pub fn compute_index_sets(
    positions: &[Position],
    k_per_agent: &[usize],
    metric: &Metric,
) -> Result<Vec<IndexSet>> {
    let n = positions.len();
    if n == 0 {
        return Err(Error::Config("neighbour search needs at least one agent".into()));
    }
    if k_per_agent.len() != n {
        return Err(Error::Config(format!(
            "{} K values supplied for {n} agents",
            k_per_agent.len()
        )));
    }

    // Pairwise distances, n(n-1)/2 evaluations for symmetric metrics.
    let mut dist = vec![0.0; n * n];
    let symmetric = metric.is_symmetric();
    for i in 0..n {
        for j in 0..n {
            if i == j || (symmetric && j < i) {
                continue;
            }
            let d = metric.distance(&positions[i], &positions[j]);
            dist[i * n + j] = d;
            if symmetric {
                dist[j * n + i] = d;
            }
        }
    }

    let mut candidates = Vec::with_capacity(n.saturating_sub(1));
    let mut sets = Vec::with_capacity(n);
    for (i, &requested) in k_per_agent.iter().enumerate() {
        let k = if requested > n - 1 {
            log::warn!("K = {requested} exceeds the {} other agents; clamping", n - 1);
            n - 1
        } else {
            requested
        };
        candidates.clear();
        candidates.extend((0..n).filter(|&j| j != i).map(|j| (dist[i * n + j], j)));
        if k == 0 {
            sets.push(IndexSet(Vec::new()));
            continue;
        }
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, by_distance_then_index);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(by_distance_then_index);
        sets.push(IndexSet(candidates.iter().map(|&(_, j)| j as u32).collect()));
    }
    Ok(sets)
}

/// Per-slot widths of a proximity-sorted critic input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotLayout {
    /// Observation entries per slot; shorter observations are zero-padded,
    /// longer ones truncated.
    pub obs_width: usize,
    pub action_width: usize,
    pub order: SlotOrder,
}

impl SlotLayout {
    pub fn slot_width(&self) -> usize {
        self.obs_width + self.action_width
    }

    pub fn input_width(&self, k: usize) -> usize {
        (k + 1) * self.slot_width()
    }

    /// Writes one slot into `out` (which must be `slot_width` long).
    pub fn write_slot(&self, obs: &[f64], action: &[f64], out: &mut [f64]) -> Result<()> {
        if action.len() != self.action_width {
            return Err(Error::Contract(format!(
                "action of length {} in a slot expecting {}",
                action.len(),
                self.action_width
            )));
        }
        let (o, a) = out.split_at_mut(self.obs_width);
        let m = obs.len().min(self.obs_width);
        o[..m].copy_from_slice(&obs[..m]);
        o[m..].fill(0.0);
        a.copy_from_slice(action);
        Ok(())
    }
}

/// Concatenates `[o_self, a_self, o_j1, a_j1, ..., o_jK, a_jK]` in the slot
/// order given by `layout`.
pub fn gather_critic_input<O, A>(
    agent: usize,
    observations: &[O],
    actions: &[A],
    index_set: &IndexSet,
    layout: &SlotLayout,
) -> Result<Vec<f64>>
where
    O: AsRef<[f64]>,
    A: AsRef<[f64]>,
{
    let n = observations.len();
    if actions.len() != n || agent >= n {
        return Err(Error::Contract(format!(
            "agent {agent} with {n} observations and {} actions",
            actions.len()
        )));
    }
    index_set.validate(agent, n, index_set.len())?;
    let slots = index_set.slots(agent, layout.order);
    let width = layout.slot_width();
    let mut out = vec![0.0; slots.len() * width];
    for (chunk, &j) in out.chunks_exact_mut(width).zip(&slots) {
        layout.write_slot(observations[j].as_ref(), actions[j].as_ref(), chunk)?;
    }
    Ok(out)
}
