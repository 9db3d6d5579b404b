use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use crate::algorithms::{MultiAgent, Phase};
use crate::env::{count_tag_events, Action, EnvConfig, ParticleEnv, TrajectoryWriter};
use crate::error::{Error, Result};
use crate::neighborhood::{compute_index_sets, IndexSet};
use crate::replay::{NeighborSets, ReplayBuffer, Transition};

/// One completed episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub agent_returns: Vec<f64>,
    pub total_return: f64,
    /// Environment steps taken since the run started.
    pub env_steps: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub seed: u64,
    pub rows: Vec<EpisodeRecord>,
}

impl RunLog {
    /// Rows compared without the wall-clock column.
    pub fn same_results(&self, other: &RunLog) -> bool {
        self.seed == other.seed
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.episode == b.episode
                    && a.agent_returns == b.agent_returns
                    && a.total_return == b.total_return
                    && a.env_steps == b.env_steps
            })
    }

    pub fn totals(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.total_return).collect()
    }
}

/// A run that stopped early; `log` holds every episode completed before the error.
#[derive(Debug, thiserror::Error)]
#[error("run with seed {} aborted after {} episodes: {source}", log.seed, log.rows.len())]
pub struct TrainingFailure {
    pub log: RunLog,
    #[source]
    pub source: Error,
}

/// Independent random streams derived from one master seed.
struct SeedStreams {
    init: ChaCha8Rng,
    actions: ChaCha8Rng,
    sampling: ChaCha8Rng,
    episodes: ChaCha8Rng,
}

impl SeedStreams {
    fn new(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        SeedStreams { init: stream(1), actions: stream(2), sampling: stream(3), episodes: stream(4) }
    }
}

/// Drives one seeded training run, episode by episode.
pub struct Trainer {
    config: ExperimentConfig,
    seed: u64,
    env: ParticleEnv,
    agents: MultiAgent,
    buffer: ReplayBuffer,
    streams: SeedStreams,
    store_sets: bool,
    samples: u64,
    updates: u64,
    skipped_updates: u64,
    episodes_done: usize,
    trajectory: Option<TrajectoryWriter<BufWriter<File>>>,
}

impl Trainer {
    pub fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let env = ParticleEnv::new(EnvConfig { seed, ..config.env.clone() })?;
        let mut streams = SeedStreams::new(seed);
        let agents = MultiAgent::new(&config.algo, &env.observation_dims(), &env.agent_kinds(), &mut streams.init)?;
        let store_sets = agents.needs_index_sets() || config.store_index_sets;
        let trajectory = if config.dump_trajectories {
            std::fs::create_dir_all(&config.output_dir)?;
            let file = File::create(config.output_dir.join(format!("trajectory_{seed}.csv")))?;
            Some(TrajectoryWriter::new(BufWriter::new(file))?)
        } else {
            None
        };
        Ok(Trainer {
            config: config.clone(),
            seed,
            env,
            agents,
            buffer: ReplayBuffer::new(config.buffer_capacity)?,
            streams,
            store_sets,
            samples: 0,
            updates: 0,
            skipped_updates: 0,
            episodes_done: 0,
            trajectory,
        })
    }

    pub fn agents(&self) -> &MultiAgent {
        &self.agents
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn env(&self) -> &ParticleEnv {
        &self.env
    }

    /// Environment steps so far; every step yields one sample per agent.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn updates_done(&self) -> u64 {
        self.updates
    }

    /// Update triggers that fired while the buffer was still below batch size.
    pub fn skipped_updates(&self) -> u64 {
        self.skipped_updates
    }

    pub fn phase(&self) -> Phase {
        if self.updates == 0 {
            Phase::Warmup
        } else {
            Phase::Learning
        }
    }

    fn index_sets(&self) -> Result<Option<Vec<IndexSet>>> {
        if !self.store_sets {
            return Ok(None);
        }
        let positions = self.env.agent_positions();
        Ok(Some(compute_index_sets(&positions, self.agents.k_per_agent(), self.agents.metric())?))
    }

    /// Plays one full episode, storing every transition and firing updates
    /// every `update_period` environment steps.
    pub fn run_episode(&mut self, started: Instant) -> Result<EpisodeRecord> {
        let episode_seed = self.streams.episodes.next_u64();
        let mut observations = self.env.reset(episode_seed);
        let mut current_sets = self.index_sets()?;
        let mut returns = vec![0.0; self.env.n_agents()];
        if let Some(t) = &mut self.trajectory {
            t.record(self.env.state())?;
        }

        loop {
            let actions = self.agents.select_actions(&observations, self.phase(), &mut self.streams.actions)?;
            let outcome = self.env.step(&actions)?;
            if let Some(bad) = outcome.rewards.iter().find(|r| !r.is_finite()) {
                return Err(Error::NonFinite(format!("reward {bad} at step {}", self.samples + 1)));
            }
            if let Some(t) = &mut self.trajectory {
                t.record(self.env.state())?;
            }
            let next_sets = self.index_sets()?;
            let neighbors = match (current_sets.take(), &next_sets) {
                (Some(current), Some(next)) => Some(NeighborSets { current, next: next.clone() }),
                _ => None,
            };
            for (acc, r) in returns.iter_mut().zip(&outcome.rewards) {
                *acc += r;
            }
            self.buffer.push(Transition {
                observations,
                actions,
                rewards: outcome.rewards,
                next_observations: outcome.observations.clone(),
                neighbors,
            });
            observations = outcome.observations;
            current_sets = next_sets;
            self.samples += 1;

            if self.samples.is_multiple_of(self.config.update_period as u64) {
                match self.agents.update_all(&self.buffer, self.config.batch_size, &mut self.streams.sampling)? {
                    Some(_) => self.updates += 1,
                    None => self.skipped_updates += 1,
                }
            }
            if outcome.done {
                break;
            }
        }

        let record = EpisodeRecord {
            episode: self.episodes_done,
            total_return: returns.iter().sum(),
            agent_returns: returns,
            env_steps: self.samples,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        self.episodes_done += 1;
        Ok(record)
    }

    /// Runs the configured number of episodes.
    pub fn run(mut self) -> std::result::Result<(RunLog, MultiAgent), TrainingFailure> {
        let started = Instant::now();
        let mut log = RunLog { seed: self.seed, rows: Vec::with_capacity(self.config.episodes) };
        for _ in 0..self.config.episodes {
            match self.run_episode(started) {
                Ok(row) => log.rows.push(row),
                Err(source) => return Err(TrainingFailure { log, source }),
            }
        }
        Ok((log, self.agents))
    }
}

/// Trains one seed from scratch and returns its per-episode log.
pub fn run_training(config: &ExperimentConfig, seed: u64) -> std::result::Result<RunLog, TrainingFailure> {
    let trainer = Trainer::new(config, seed)
        .map_err(|source| TrainingFailure { log: RunLog { seed, rows: Vec::new() }, source })?;
    trainer.run().map(|(log, _)| log)
}

/// Which agents act through their actors during [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Controller {
    /// Every agent follows its actor (no exploration noise).
    AllPolicies,
    /// Adversaries follow their actors; good agents act uniformly at random.
    AdversariesVsRandom,
    /// Every agent acts uniformly at random.
    AllRandom,
}

/// Summary of evaluation episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mean_total_return: f64,
    pub mean_tag_events: f64,
    pub episode_returns: Vec<f64>,
}

/// Plays `episodes` evaluation episodes without learning.
pub fn evaluate(
    agents: &MultiAgent,
    env_config: &EnvConfig,
    controller: Controller,
    episodes: usize,
    seed: u64,
) -> Result<Evaluation> {
    let mut env = ParticleEnv::new(EnvConfig { seed, ..env_config.clone() })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = env.agent_kinds();
    let mut tags = 0usize;
    let mut episode_returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(rng.next_u64());
        let mut total = 0.0;
        loop {
            let actions: Vec<Action> = obs
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    let use_policy = match controller {
                        Controller::AllPolicies => true,
                        Controller::AdversariesVsRandom => kinds[i] == crate::env::EntityKind::Adversary,
                        Controller::AllRandom => false,
                    };
                    if use_policy {
                        let out = agents.learners()[i].actor.forward(o)?;
                        crate::env::to_action(&out)
                    } else {
                        Ok(std::array::from_fn(|_| rng.random::<f64>()))
                    }
                })
                .collect::<Result<_>>()?;
            let out = env.step(&actions)?;
            tags += count_tag_events(env.state());
            total += out.rewards.iter().sum::<f64>();
            obs = out.observations;
            if out.done {
                break;
            }
        }
        episode_returns.push(total);
    }
    let n = episodes.max(1) as f64;
    Ok(Evaluation {
        mean_total_return: episode_returns.iter().sum::<f64>() / n,
        mean_tag_events: tags as f64 / n,
        episode_returns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{AlgoConfig, Algorithm};

    fn tiny(algorithm: Algorithm, episodes: usize) -> ExperimentConfig {
        ExperimentConfig {
            env: EnvConfig::spread(3),
            algo: AlgoConfig { hidden: vec![8, 8], ..AlgoConfig::new(algorithm) },
            episodes,
            batch_size: 32,
            update_period: 10,
            seeds: vec![0],
            ..Default::default()
        }
    }

    #[test]
    fn one_episode_fills_buffer() {
        let cfg = ExperimentConfig { episodes: 1, ..tiny(Algorithm::MaddpgK, 1) };
        let (log, _) = Trainer::new(&cfg, 3).unwrap().run().unwrap();
        assert_eq!(log.rows.len(), 1);
        assert_eq!(log.rows[0].env_steps, 25);
        let mut t = Trainer::new(&cfg, 3).unwrap();
        t.run_episode(Instant::now()).unwrap();
        assert_eq!(t.buffer().len(), 25);
        // K = 2 among 3 agents: 2·3·2 stored indices per transition.
        assert_eq!(t.buffer().get(0).unwrap().neighbors.as_ref().unwrap().entry_count(), 12);
    }

    #[test]
    fn reruns_are_identical() {
        for algo in [Algorithm::Ddpg, Algorithm::Maddpg, Algorithm::MaddpgK] {
            let cfg = tiny(algo, 4);
            let a = run_training(&cfg, 5).unwrap();
            let b = run_training(&cfg, 5).unwrap();
            assert!(a.same_results(&b), "{algo}");
            assert!(a.rows.windows(2).all(|w| w[0].episode < w[1].episode));
        }
    }

    #[test]
    fn update_schedule_and_not_ready_rule() {
        // Period 10, batch 32: triggers at 10, 20, 30 are skipped (buffer < 32),
        // the first real update happens at step 40.
        let cfg = tiny(Algorithm::Maddpg, 2);
        let mut t = Trainer::new(&cfg, 0).unwrap();
        t.run_episode(Instant::now()).unwrap();
        assert_eq!((t.skipped_updates(), t.updates_done()), (2, 0));
        assert_eq!(t.phase(), Phase::Warmup);
        t.run_episode(Instant::now()).unwrap();
        assert_eq!((t.skipped_updates(), t.updates_done()), (3, 2));
        assert_eq!(t.phase(), Phase::Learning);
    }

    #[test]
    fn targets_constant_between_updates() {
        let cfg = ExperimentConfig { update_period: 50, ..tiny(Algorithm::MaddpgK, 1) };
        let mut t = Trainer::new(&cfg, 1).unwrap();
        let before: Vec<_> = t.agents().learners().iter().map(|l| l.target_critic.clone()).collect();
        t.run_episode(Instant::now()).unwrap();
        let after: Vec<_> = t.agents().learners().iter().map(|l| l.target_critic.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn maddpg_k_without_sets_is_rejected_at_update() {
        // Sets are always stored for MADDPG-K; a DDPG run stores none unless asked.
        let cfg = tiny(Algorithm::Ddpg, 1);
        let mut t = Trainer::new(&cfg, 0).unwrap();
        t.run_episode(Instant::now()).unwrap();
        assert!(t.buffer().get(0).unwrap().neighbors.is_none());
        let cfg = ExperimentConfig { store_index_sets: true, ..cfg };
        let mut t = Trainer::new(&cfg, 0).unwrap();
        t.run_episode(Instant::now()).unwrap();
        assert!(t.buffer().get(0).unwrap().neighbors.is_some());
    }

    #[test]
    fn evaluation_counts_tags() {
        let env = EnvConfig::tag(1, 3);
        let cfg = ExperimentConfig { env: env.clone(), ..tiny(Algorithm::MaddpgK, 1) };
        let t = Trainer::new(&cfg, 0).unwrap();
        let eval = evaluate(t.agents(), &env, Controller::AdversariesVsRandom, 5, 9).unwrap();
        assert_eq!(eval.episode_returns.len(), 5);
        assert!(eval.mean_tag_events >= 0.0);
        let again = evaluate(t.agents(), &env, Controller::AdversariesVsRandom, 5, 9).unwrap();
        assert_eq!(eval, again);
    }
}
