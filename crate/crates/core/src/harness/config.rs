use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::AlgoConfig;
use crate::env::EnvConfig;
use crate::error::{config_err, Result};
use crate::replay::DEFAULT_CAPACITY;

pub const DEFAULT_EPISODES: usize = 3000;
pub const BENCHMARK_EPISODES: usize = 200;
pub const DEFAULT_SEEDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub algo: AlgoConfig,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    /// Environment steps (samples per agent) between update triggers.
    pub update_period: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub output_dir: PathBuf,
    pub benchmark: bool,
    /// Store neighbour index sets even when the algorithm does not read them.
    pub store_index_sets: bool,
    /// Seeds trained concurrently. The benchmark always runs on one thread.
    pub jobs: usize,
    /// Write a `trajectory_<seed>.csv` of every entity state.
    pub dump_trajectories: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvConfig::spread(3),
            algo: AlgoConfig::default(),
            seeds: (0..DEFAULT_SEEDS as u64).collect(),
            episodes: DEFAULT_EPISODES,
            update_period: 100,
            batch_size: 1024,
            buffer_capacity: DEFAULT_CAPACITY,
            output_dir: PathBuf::from("runs"),
            benchmark: false,
            store_index_sets: false,
            jobs: 1,
            dump_trajectories: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.algo.validate()?;
        if self.episodes == 0 {
            return Err(config_err("episodes must be positive"));
        }
        if self.update_period == 0 || self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(config_err("update period, batch size and buffer capacity must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(config_err("at least one seed is required"));
        }
        if self.jobs == 0 {
            return Err(config_err("jobs must be positive"));
        }
        Ok(())
    }
}
