use std::path::Path;

use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::{AlgoConfig, Algorithm};
use super::critic_input::{current_inputs, next_inputs, CriticBatch, CriticLayout};
use crate::env::{Action, EntityKind, ACTION_DIM};
use crate::error::{config_err, Error, Result};
use crate::neighborhood::Metric;
use crate::nn::{load_mlp, save_mlp, Activation, Adam, Gradients, InputGradient, Mlp};
use crate::replay::{ReplayBuffer, Transition};

/// Actor, critic, their target copies and optimizer state for one agent.
#[derive(Debug, Clone)]
pub struct AgentLearner {
    pub index: usize,
    pub kind: EntityKind,
    pub obs_dim: usize,
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub layout: CriticLayout,
}

impl AgentLearner {
    pub fn critic_width(&self) -> usize {
        self.layout.width()
    }

    /// Writes `agent_<i>_{actor,critic,target_actor,target_critic}.mlp` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (name, net) in self.named_networks() {
            save_mlp(net, dir.join(format!("agent_{}_{name}.mlp", self.index)))?;
        }
        Ok(())
    }

    /// Restores network parameters saved by [`AgentLearner::save`]. Shapes must match.
    pub fn load(&mut self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let load = |name: &str, current: &Mlp| -> Result<Mlp> {
            let net = load_mlp(dir.join(format!("agent_{}_{name}.mlp", self.index)))?;
            if !net.same_shape(current) {
                return Err(Error::Checkpoint(format!("{name} of agent {} has the wrong shape", self.index)));
            }
            Ok(net)
        };
        let actor = load("actor", &self.actor)?;
        let critic = load("critic", &self.critic)?;
        let target_actor = load("target_actor", &self.target_actor)?;
        let target_critic = load("target_critic", &self.target_critic)?;
        self.actor = actor;
        self.critic = critic;
        self.target_actor = target_actor;
        self.target_critic = target_critic;
        Ok(())
    }

    fn named_networks(&self) -> [(&'static str, &Mlp); 4] {
        [
            ("actor", &self.actor),
            ("critic", &self.critic),
            ("target_actor", &self.target_actor),
            ("target_critic", &self.target_critic),
        ]
    }
}

/// Exploration regime for [`MultiAgent::select_actions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Before the first network update: uniform random actions.
    Warmup,
    /// Actor output plus clipped Gaussian noise.
    Learning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: Vec<f64>,
    pub actor_objective: Vec<f64>,
}

/// All learners of one run.
#[derive(Debug, Clone)]
pub struct MultiAgent {
    config: AlgoConfig,
    metric: Metric,
    learners: Vec<AgentLearner>,
    k_per_agent: Vec<usize>,
}

fn network_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

impl MultiAgent {
    /// Builds one learner per agent. Networks are initialized agent by agent,
    /// actor before critic, from `rng`; targets start as exact copies.
    pub fn new<R: Rng + ?Sized>(
        config: &AlgoConfig,
        obs_dims: &[usize],
        kinds: &[EntityKind],
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let n = obs_dims.len();
        if n == 0 || kinds.len() != n {
            return Err(config_err("one observation size and kind per agent required"));
        }
        let metric: Metric = config.metric.into();
        let slot_obs = config
            .critic_slot_obs
            .unwrap_or_else(|| *obs_dims.iter().max().expect("non-empty"));

        let mut k_per_agent = Vec::with_capacity(n);
        let mut learners = Vec::with_capacity(n);
        for (i, (&obs_dim, &kind)) in obs_dims.iter().zip(kinds).enumerate() {
            let requested = config.k.for_kind(kind);
            let k = if requested > n - 1 {
                log::warn!("K = {requested} exceeds the {} other agents; clamping", n - 1);
                n - 1
            } else {
                requested
            };
            k_per_agent.push(k);
            let layout = match config.algorithm {
                Algorithm::Ddpg => CriticLayout::Own { agent: i, obs_dim },
                Algorithm::Maddpg => CriticLayout::Joint { agent: i, obs_dims: obs_dims.to_vec() },
                Algorithm::MaddpgK => {
                    CriticLayout::Neighborhood { agent: i, k, slot_obs, order: metric.slot_order() }
                }
            };
            let actor = Mlp::new(
                &network_sizes(obs_dim, &config.hidden, ACTION_DIM),
                Activation::Relu,
                Activation::Sigmoid,
                rng,
            )?;
            let critic = Mlp::new(
                &network_sizes(layout.width(), &config.hidden, 1),
                Activation::Relu,
                Activation::Identity,
                rng,
            )?;
            learners.push(AgentLearner {
                index: i,
                kind,
                obs_dim,
                target_actor: actor.clone(),
                target_critic: critic.clone(),
                actor_opt: Adam::new(&actor),
                critic_opt: Adam::new(&critic),
                actor,
                critic,
                layout,
            });
        }
        Ok(MultiAgent { config: config.clone(), metric, learners, k_per_agent })
    }

    pub fn config(&self) -> &AlgoConfig {
        &self.config
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn learners(&self) -> &[AgentLearner] {
        &self.learners
    }

    pub fn learners_mut(&mut self) -> &mut [AgentLearner] {
        &mut self.learners
    }

    /// Effective (clamped) neighbour count per agent.
    pub fn k_per_agent(&self) -> &[usize] {
        &self.k_per_agent
    }

    pub fn needs_index_sets(&self) -> bool {
        self.config.algorithm == Algorithm::MaddpgK
    }

    pub fn critic_widths(&self) -> Vec<usize> {
        self.learners.iter().map(AgentLearner::critic_width).collect()
    }

    pub fn select_actions<R: Rng + ?Sized>(
        &self,
        observations: &[Vec<f64>],
        phase: Phase,
        rng: &mut R,
    ) -> Result<Vec<Action>> {
        if observations.len() != self.learners.len() {
            return Err(Error::Contract(format!(
                "{} observations for {} agents",
                observations.len(),
                self.learners.len()
            )));
        }
        match phase {
            Phase::Warmup => Ok(observations
                .iter()
                .map(|_| std::array::from_fn(|_| rng.random::<f64>()))
                .collect()),
            Phase::Learning => {
                let noise = Normal::new(0.0, self.config.noise_std)
                    .map_err(|e| config_err(e.to_string()))?;
                self.learners
                    .iter()
                    .zip(observations)
                    .map(|(l, o)| {
                        let out = l.actor.forward(o)?;
                        Ok(std::array::from_fn(|c| {
                            let a = if self.config.noise_std > 0.0 {
                                out[c] + noise.sample(rng)
                            } else {
                                out[c]
                            };
                            a.clamp(0.0, 1.0)
                        }))
                    })
                    .collect()
            }
        }
    }

    fn target_actors(&self) -> Vec<&Mlp> {
        self.learners.iter().map(|l| &l.target_actor).collect()
    }

    /// Current-state critic inputs for `agent`.
    pub fn critic_inputs(&self, agent: usize, batch: &[&Transition]) -> Result<CriticBatch> {
        current_inputs(&self.learners[agent].layout, batch)
    }

    /// Next-state critic inputs for `agent`, other actions from target actors.
    pub fn next_critic_inputs(&self, agent: usize, batch: &[&Transition]) -> Result<Array2<f64>> {
        next_inputs(&self.learners[agent].layout, batch, &self.target_actors())
    }

    /// TD targets `y = r_i + γ·Q′_i(x′, μ′(o′))`. Episodes only truncate, so
    /// every target bootstraps.
    pub fn td_targets(&self, agent: usize, batch: &[&Transition]) -> Result<Vec<f64>> {
        let next = self.next_critic_inputs(agent, batch)?;
        let q_next = self.learners[agent].target_critic.predict_batch(next)?;
        Ok(batch
            .iter()
            .zip(q_next.column(0))
            .map(|(t, q)| t.rewards[agent] + self.config.gamma * q)
            .collect())
    }

    /// Mean squared TD error and its gradient w.r.t. the critic parameters.
    pub fn critic_loss_and_gradients(
        &self,
        agent: usize,
        batch: &[&Transition],
        inputs: &CriticBatch,
    ) -> Result<(f64, Gradients)> {
        let targets = self.td_targets(agent, batch)?;
        let critic = &self.learners[agent].critic;
        let cache = critic.forward_batch(inputs.input.clone())?;
        let b = batch.len() as f64;
        let diff: Vec<f64> = cache.output().column(0).iter().zip(&targets).map(|(q, y)| q - y).collect();
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / b;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("critic loss of agent {agent} is {loss}")));
        }
        let upstream = Array2::from_shape_fn((diff.len(), 1), |(r, _)| 2.0 * diff[r] / b);
        let (grads, _) = critic.backward_batch(&cache, upstream.view(), InputGradient::Skip)?;
        Ok((loss, grads))
    }

    /// Mean `Q_i` with the agent's own action replaced by `μ_i(o_i)`, minus
    /// `actor_preact_reg · mean(z²)` over the actor's output pre-activations
    /// `z`, and the gradient of its negation w.r.t. the actor parameters.
    /// Other agents' actions come from the batch.
    pub fn actor_objective_and_gradients(
        &self,
        agent: usize,
        batch: &[&Transition],
        inputs: &CriticBatch,
    ) -> Result<(f64, Gradients)> {
        let learner = &self.learners[agent];
        let mut obs = Array2::zeros((batch.len(), learner.obs_dim));
        for (mut row, t) in obs.rows_mut().into_iter().zip(batch) {
            row.as_slice_mut().expect("standard layout").copy_from_slice(&t.observations[agent]);
        }
        let actor_cache = learner.actor.forward_batch(obs)?;
        let policy_actions = actor_cache.output();

        let mut x = inputs.input.clone();
        for ((mut row, a), &col) in x.rows_mut().into_iter().zip(policy_actions.rows()).zip(&inputs.own_action_col) {
            row.slice_mut(s![col..col + ACTION_DIM]).assign(&a);
        }
        let critic_cache = learner.critic.forward_batch(x)?;
        let b = batch.len() as f64;
        let reg = self.config.actor_preact_reg;
        let (penalty, preact_grad) = if reg > 0.0 {
            let z = learner.actor.output_preactivation(&actor_cache)?;
            let scale = reg / z.len() as f64;
            (scale * z.iter().map(|v| v * v).sum::<f64>(), Some(z * (2.0 * scale)))
        } else {
            (0.0, None)
        };
        let objective = critic_cache.output().sum() / b - penalty;
        if !objective.is_finite() {
            return Err(Error::NonFinite(format!("actor objective of agent {agent} is {objective}")));
        }
        let upstream = Array2::from_elem((batch.len(), 1), -1.0 / b);

        let action_grad = match inputs.uniform_own_action_col() {
            Some(col) => learner
                .critic
                .backward_batch(&critic_cache, upstream.view(), InputGradient::Columns(col..col + ACTION_DIM))?
                .1
                .expect("columns requested"),
            None => {
                let full = learner
                    .critic
                    .backward_batch(&critic_cache, upstream.view(), InputGradient::Full)?
                    .1
                    .expect("full gradient requested");
                let mut g = Array2::zeros((batch.len(), ACTION_DIM));
                for ((mut dst, src), &col) in g.axis_iter_mut(Axis(0)).zip(full.rows()).zip(&inputs.own_action_col) {
                    dst.assign(&src.slice(s![col..col + ACTION_DIM]));
                }
                g
            }
        };
        let (grads, _) = learner.actor.backward_batch_with_preactivation(
            &actor_cache,
            action_grad.view(),
            preact_grad.as_ref().map(|g| g.view()),
            InputGradient::Skip,
        )?;
        Ok((objective, grads))
    }

    /// One clipped Adam step on agent `agent`'s critic. Returns the loss.
    pub fn critic_update(&mut self, agent: usize, batch: &[&Transition], inputs: &CriticBatch) -> Result<f64> {
        let (loss, mut grads) = self.critic_loss_and_gradients(agent, batch, inputs)?;
        grads.clip_norm(self.config.clip_norm);
        let lr = self.config.learning_rate;
        let l = &mut self.learners[agent];
        l.critic_opt.step(&mut l.critic, &grads, lr)?;
        Ok(loss)
    }

    /// One clipped Adam step on agent `agent`'s actor. Returns the objective.
    pub fn actor_update(&mut self, agent: usize, batch: &[&Transition], inputs: &CriticBatch) -> Result<f64> {
        let (objective, mut grads) = self.actor_objective_and_gradients(agent, batch, inputs)?;
        grads.clip_norm(self.config.clip_norm);
        let lr = self.config.learning_rate;
        let l = &mut self.learners[agent];
        l.actor_opt.step(&mut l.actor, &grads, lr)?;
        Ok(objective)
    }

    /// Soft-updates every target network toward its trained counterpart.
    pub fn update_targets(&mut self) -> Result<()> {
        let tau = self.config.tau;
        for l in &mut self.learners {
            l.target_actor.soft_update_from(&l.actor, tau)?;
            l.target_critic.soft_update_from(&l.critic, tau)?;
        }
        Ok(())
    }

    /// For each agent in turn: sample a batch, update the critic, then the
    /// actor on the same batch. Targets are soft-updated once all agents are
    /// done. Returns `None` (and changes nothing) while the buffer holds
    /// fewer than `batch_size` transitions.
    pub fn update_all<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Option<UpdateStats>> {
        if buffer.len() < batch_size || batch_size == 0 {
            return Ok(None);
        }
        let n = self.learners.len();
        let mut stats = UpdateStats { critic_loss: Vec::with_capacity(n), actor_objective: Vec::with_capacity(n) };
        for agent in 0..n {
            let batch = buffer.sample(batch_size, rng).expect("size checked above");
            let inputs = self.critic_inputs(agent, &batch)?;
            stats.critic_loss.push(self.critic_update(agent, &batch, &inputs)?);
            stats.actor_objective.push(self.actor_update(agent, &batch, &inputs)?);
        }
        self.update_targets()?;
        Ok(Some(stats))
    }
}
