//! Experiment driver: seeded training runs, aggregation, CSV logs, the
//! scaling benchmark and the command-line entry point.

pub mod aggregate;
pub mod benchmark;
pub mod cli;
pub mod config;
pub mod training;

pub use aggregate::{
    aggregate_runs, final_window_mean, mean, population_std, read_aggregate_csv, read_run_csv, write_aggregate_csv,
    write_run_csv, AggregateRow,
};
pub use benchmark::{read_scaling_csv, run_scaling_benchmark, write_scaling_csv, ScalingRow};
pub use cli::{cli_main, train_all, Cli};
pub use config::{ExperimentConfig, BENCHMARK_EPISODES, DEFAULT_EPISODES, DEFAULT_SEEDS};
pub use training::{evaluate, run_training, Controller, EpisodeRecord, Evaluation, RunLog, Trainer, TrainingFailure};
