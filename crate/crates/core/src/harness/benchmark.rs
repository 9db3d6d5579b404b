//! Wall-clock scaling of MADDPG against MADDPG-K on Simple Spread.

use std::io::{BufRead, Write};
use std::time::Instant;

use super::aggregate::{parse, SCALING_SCHEMA};
use super::config::ExperimentConfig;
use super::training::Trainer;
use crate::algorithms::{AlgoConfig, Algorithm};
use crate::env::EnvConfig;
use crate::error::{config_err, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub algorithm: Algorithm,
    pub n: usize,
    /// Critic input width of agent 0.
    pub critic_width: usize,
    pub episodes: usize,
    pub updates: u64,
    pub seconds: f64,
    pub seconds_per_100: f64,
}

/// Times `config.episodes` training episodes of MADDPG and MADDPG-K for each
/// `n`, serially on the calling thread. Both algorithms share every setting
/// except the critic input. Only the episode and update loop is timed.
pub fn run_scaling_benchmark(config: &ExperimentConfig, n_values: &[usize]) -> Result<Vec<ScalingRow>> {
    if n_values.is_empty() {
        return Err(config_err("benchmark needs at least one n"));
    }
    let seed = *config.seeds.first().ok_or_else(|| config_err("benchmark needs a seed"))?;
    let mut rows = Vec::with_capacity(2 * n_values.len());
    for &n in n_values {
        for algorithm in [Algorithm::Maddpg, Algorithm::MaddpgK] {
            let cfg = ExperimentConfig {
                env: EnvConfig { seed, ..EnvConfig::spread(n) },
                algo: AlgoConfig { algorithm, ..config.algo.clone() },
                store_index_sets: false,
                dump_trajectories: false,
                ..config.clone()
            };
            let mut trainer = Trainer::new(&cfg, seed)?;
            let critic_width = trainer.agents().critic_widths()[0];
            let started = Instant::now();
            for _ in 0..cfg.episodes {
                trainer.run_episode(started)?;
            }
            let seconds = started.elapsed().as_secs_f64();
            log::info!("{algorithm} n={n}: {seconds:.2}s for {} episodes", cfg.episodes);
            rows.push(ScalingRow {
                algorithm,
                n,
                critic_width,
                episodes: cfg.episodes,
                updates: trainer.updates_done(),
                seconds,
                seconds_per_100: seconds * 100.0 / cfg.episodes as f64,
            });
        }
    }
    Ok(rows)
}

pub fn write_scaling_csv<W: Write>(out: &mut W, rows: &[ScalingRow], config_json: Option<&str>) -> Result<()> {
    writeln!(out, "# schema: {SCALING_SCHEMA}")?;
    if let Some(json) = config_json {
        writeln!(out, "# config: {json}")?;
    }
    writeln!(out, "algorithm,n,critic_width,episodes,updates,seconds,seconds_per_100_episodes")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6}",
            r.algorithm, r.n, r.critic_width, r.episodes, r.updates, r.seconds, r.seconds_per_100
        )?;
    }
    Ok(())
}

pub fn read_scaling_csv<R: BufRead>(input: R) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    let mut schema_ok = false;
    let mut header_seen = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if let Some(c) = line.strip_prefix('#') {
            schema_ok |= c.trim() == format!("schema: {SCALING_SCHEMA}");
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(config_err(format!("line {}: expected 7 fields", i + 1)));
        }
        let line = i + 1;
        rows.push(ScalingRow {
            algorithm: f[0].parse()?,
            n: parse(f[1], line)?,
            critic_width: parse(f[2], line)?,
            episodes: parse(f[3], line)?,
            updates: parse(f[4], line)?,
            seconds: parse(f[5], line)?,
            seconds_per_100: parse(f[6], line)?,
        });
    }
    if !schema_ok {
        return Err(config_err(format!("missing '# schema: {SCALING_SCHEMA}' header")));
    }
    Ok(rows)
}
