use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::Parser;

use super::aggregate::{aggregate_runs, read_run_csv, write_aggregate_csv, write_run_csv};
use super::benchmark::{run_scaling_benchmark, write_scaling_csv};
use super::config::{ExperimentConfig, BENCHMARK_EPISODES};
use super::training::{RunLog, Trainer, TrainingFailure};
use crate::algorithms::{Algorithm, KPerKind};
use crate::env::{EnvConfig, Scenario};
use crate::error::{config_err, Error, Result};
use crate::neighborhood::MetricId;

#[derive(Debug, Parser)]
#[command(name = "maddpgk", version, about = "Train DDPG, MADDPG and MADDPG-K on particle worlds")]
pub struct Cli {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// spread, tag or adversary.
    #[arg(long)]
    pub env: Option<Scenario>,
    /// ddpg, maddpg or maddpg_k.
    #[arg(long)]
    pub algo: Option<Algorithm>,
    /// Number of agents (good agents for tag).
    #[arg(long)]
    pub n: Option<usize>,
    /// Neighbours per critic, excluding the agent itself.
    #[arg(long)]
    pub k: Option<usize>,
    /// euclidean or index_order.
    #[arg(long)]
    pub metric: Option<String>,
    /// Number of seeds, counted up from --seed-base.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub update_period: Option<usize>,
    /// Time MADDPG against MADDPG-K on spread for each n in --n-list.
    #[arg(long)]
    pub benchmark: bool,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seeds trained in parallel.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write per-step entity states to trajectory_<seed>.csv.
    #[arg(long)]
    pub dump_trajectories: bool,
    /// Skip saving final networks.
    #[arg(long)]
    pub no_checkpoints: bool,
    /// Aggregate existing run_<seed>.csv files into <out>/aggregate.csv.
    #[arg(long, num_args = 1..)]
    pub aggregate: Vec<PathBuf>,
}

/// Parses `args` (program name first) and runs the requested mode.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    if !cli.aggregate.is_empty() {
        return aggregate_files(&cli.aggregate, &out_dir(cli, None));
    }
    let cfg = build_config(cli)?;
    if cfg.benchmark {
        let n_list = if cli.n_list.is_empty() { vec![5, 15, 30, 45] } else { cli.n_list.clone() };
        let rows = run_scaling_benchmark(&cfg, &n_list)?;
        std::fs::create_dir_all(&cfg.output_dir)?;
        let mut out = BufWriter::new(File::create(cfg.output_dir.join("scaling.csv"))?);
        write_scaling_csv(&mut out, &rows, Some(&cfg.to_json()?))?;
        out.flush()?;
        return Ok(());
    }
    train_all(&cfg, !cli.no_checkpoints).map(|_| ())
}

/// Agent count used when `--n` is absent: one prey for tag, three otherwise.
fn default_n(scenario: Scenario) -> usize {
    match scenario {
        Scenario::Tag => 1,
        _ => 3,
    }
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.map(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Merges the config file (if any) with command-line overrides.
pub fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let file = cli.config.as_ref().map(ExperimentConfig::from_json_file).transpose()?;
    let has_file = file.is_some();
    let mut cfg = file.unwrap_or_default();
    cfg.benchmark |= cli.benchmark;

    match (cli.env, cli.n) {
        (Some(scenario), n) => {
            let n = n.unwrap_or(if cfg.env.scenario == scenario { cfg.env.n_good } else { default_n(scenario) });
            cfg.env = EnvConfig { seed: cfg.env.seed, ..EnvConfig::for_scenario(scenario, n) };
        }
        (None, Some(n)) if has_file || cfg.benchmark => {
            cfg.env = EnvConfig { seed: cfg.env.seed, ..EnvConfig::for_scenario(cfg.env.scenario, n) };
        }
        (None, _) if !has_file && !cfg.benchmark => {
            return Err(config_err("--env is required unless --config or --benchmark is given"));
        }
        _ => {}
    }
    if cfg.benchmark {
        if cli.env.is_some_and(|s| s != Scenario::Spread) {
            return Err(config_err("the benchmark runs on spread only"));
        }
        if cli.episodes.is_none() && !has_file {
            cfg.episodes = BENCHMARK_EPISODES;
        }
        if cli.seeds.is_none() && !has_file {
            cfg.seeds = vec![cli.seed_base];
        }
    }
    if let Some(a) = cli.algo {
        cfg.algo.algorithm = a;
    }
    if let Some(k) = cli.k {
        cfg.algo.k = KPerKind::uniform(k);
    }
    if let Some(m) = &cli.metric {
        cfg.algo.metric = serde_json::from_value::<MetricId>(serde_json::Value::String(m.clone()))
            .map_err(|_| config_err(format!("unknown metric '{m}'")))?;
    }
    if let Some(s) = cli.seeds {
        cfg.seeds = (cli.seed_base..cli.seed_base + s as u64).collect();
    } else if cli.seed_base != 0 && !has_file {
        let count = cfg.seeds.len() as u64;
        cfg.seeds = (cli.seed_base..cli.seed_base + count).collect();
    }
    if let Some(e) = cli.episodes {
        cfg.episodes = e;
    }
    if let Some(b) = cli.batch {
        cfg.batch_size = b;
    }
    if let Some(u) = cli.update_period {
        cfg.update_period = u;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    cfg.dump_trajectories |= cli.dump_trajectories;
    cfg.output_dir = out_dir(cli, Some(&cfg));
    cfg.validate()?;
    Ok(cfg)
}

fn write_log(path: &Path, log: &RunLog, config_json: &str, error: Option<&Error>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_run_csv(&mut out, log, Some(config_json))?;
    if let Some(e) = error {
        writeln!(out, "# error: {e}")?;
    }
    out.flush()?;
    Ok(())
}

fn train_seed(cfg: &ExperimentConfig, seed: u64, checkpoints: bool, config_json: &str) -> Result<RunLog> {
    let path = cfg.output_dir.join(format!("run_{seed}.csv"));
    let outcome = Trainer::new(cfg, seed)
        .map_err(|source| TrainingFailure { log: RunLog { seed, rows: Vec::new() }, source })
        .and_then(Trainer::run);
    match outcome {
        Ok((log, agents)) => {
            write_log(&path, &log, config_json, None)?;
            if checkpoints {
                let dir = cfg.output_dir.join("checkpoints").join(format!("seed_{seed}"));
                std::fs::create_dir_all(&dir)?;
                for learner in agents.learners() {
                    learner.save(&dir)?;
                }
            }
            log::info!("seed {seed}: {} episodes", log.rows.len());
            Ok(log)
        }
        Err(TrainingFailure { log, source }) => {
            write_log(&path, &log, config_json, Some(&source))?;
            Err(source)
        }
    }
}

/// Trains every configured seed, writing `run_<seed>.csv` files and `aggregate.csv`.
pub fn train_all(cfg: &ExperimentConfig, checkpoints: bool) -> Result<Vec<RunLog>> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let config_json = cfg.to_json()?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<RunLog>)>> = Mutex::new(Vec::new());
    let workers = cfg.jobs.min(cfg.seeds.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = cfg.seeds.get(i) else { break };
                let r = train_seed(cfg, seed, checkpoints, &config_json);
                results.lock().unwrap_or_else(|p| p.into_inner()).push((i, r));
            });
        }
    });
    let mut results = results.into_inner().unwrap_or_else(|p| p.into_inner());
    results.sort_by_key(|(i, _)| *i);
    let logs: Vec<RunLog> = results.into_iter().map(|(_, r)| r).collect::<Result<_>>()?;
    let mut out = BufWriter::new(File::create(cfg.output_dir.join("aggregate.csv"))?);
    write_aggregate_csv(&mut out, &aggregate_runs(&logs)?, Some(&config_json))?;
    out.flush()?;
    Ok(logs)
}

fn aggregate_files(paths: &[PathBuf], out_dir: &Path) -> Result<()> {
    let logs = paths
        .iter()
        .map(|p| read_run_csv(BufReader::new(File::open(p)?)))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out_dir)?;
    let mut out = BufWriter::new(File::create(out_dir.join("aggregate.csv"))?);
    write_aggregate_csv(&mut out, &aggregate_runs(&logs)?, None)?;
    out.flush()?;
    Ok(())
}
