//! Cross-seed aggregation and the CSV files consumed by the plotting scripts.

use std::io::{BufRead, Write};

use super::training::{EpisodeRecord, RunLog};
use crate::error::{config_err, Error, Result};

pub const RUN_SCHEMA: &str = "run v1";
pub const AGGREGATE_SCHEMA: &str = "aggregate v1";
pub const SCALING_SCHEMA: &str = "scaling v1";

/// Per-episode statistics of the total return across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub episode: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub seeds: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divides by `n`).
pub fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Averages total returns per episode over seeds. Logs must have equal length.
pub fn aggregate_runs(logs: &[RunLog]) -> Result<Vec<AggregateRow>> {
    let first = logs.first().ok_or_else(|| config_err("no runs to aggregate"))?;
    let len = first.rows.len();
    if let Some(bad) = logs.iter().find(|l| l.rows.len() != len) {
        return Err(config_err(format!(
            "seed {} has {} episodes, seed {} has {len}",
            bad.seed,
            bad.rows.len(),
            first.seed
        )));
    }
    Ok((0..len)
        .map(|e| {
            let totals: Vec<f64> = logs.iter().map(|l| l.rows[e].total_return).collect();
            AggregateRow { episode: first.rows[e].episode, mean: mean(&totals), std: population_std(&totals), seeds: logs.len() }
        })
        .collect())
}

/// Mean total return over the last `window` episodes of one run.
pub fn final_window_mean(log: &RunLog, window: usize) -> f64 {
    let totals = log.totals();
    let start = totals.len().saturating_sub(window);
    mean(&totals[start..])
}

fn header<W: Write>(out: &mut W, schema: &str, config_json: Option<&str>) -> Result<()> {
    writeln!(out, "# schema: {schema}")?;
    if let Some(json) = config_json {
        writeln!(out, "# config: {json}")?;
    }
    Ok(())
}

pub fn write_run_csv<W: Write>(out: &mut W, log: &RunLog, config_json: Option<&str>) -> Result<()> {
    header(out, RUN_SCHEMA, config_json)?;
    let n = log.rows.first().map_or(0, |r| r.agent_returns.len());
    let agent_cols: String = (0..n).map(|i| format!(",return_{i}")).collect();
    writeln!(out, "seed,episode{agent_cols},total_return,env_steps,wall_ms")?;
    for r in &log.rows {
        write!(out, "{},{}", log.seed, r.episode)?;
        for v in &r.agent_returns {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",{},{},{:.3}", r.total_return, r.env_steps, r.wall_ms)?;
    }
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(out: &mut W, rows: &[AggregateRow], config_json: Option<&str>) -> Result<()> {
    header(out, AGGREGATE_SCHEMA, config_json)?;
    writeln!(out, "episode,mean_return,std_return,seeds")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.episode, r.mean, r.std, r.seeds)?;
    }
    Ok(())
}

fn data_lines<R: BufRead>(input: R, expected_schema: &str) -> Result<Vec<Vec<String>>> {
    let mut schema_ok = false;
    let mut lines = Vec::new();
    for line in input.lines() {
        let line = line?;
        if let Some(comment) = line.strip_prefix('#') {
            if comment.trim() == format!("schema: {expected_schema}") {
                schema_ok = true;
            }
            continue;
        }
        if !line.trim().is_empty() {
            lines.push(line.split(',').map(str::to_owned).collect());
        }
    }
    if !schema_ok {
        return Err(Error::Config(format!("missing '# schema: {expected_schema}' header")));
    }
    if lines.is_empty() {
        return Err(config_err("csv has no column header"));
    }
    Ok(lines)
}

pub(crate) fn parse<T: std::str::FromStr>(field: &str, line: usize) -> Result<T> {
    field.parse().map_err(|_| config_err(format!("line {line}: cannot parse '{field}'")))
}

pub fn read_run_csv<R: BufRead>(input: R) -> Result<RunLog> {
    let lines = data_lines(input, RUN_SCHEMA)?;
    let n_agents = lines[0].iter().filter(|c| c.starts_with("return_")).count();
    let mut log = RunLog::default();
    for (i, f) in lines.iter().enumerate().skip(1) {
        if f.len() != n_agents + 5 {
            return Err(config_err(format!("line {i}: expected {} fields", n_agents + 5)));
        }
        log.seed = parse(&f[0], i)?;
        log.rows.push(EpisodeRecord {
            episode: parse(&f[1], i)?,
            agent_returns: f[2..2 + n_agents].iter().map(|v| parse(v, i)).collect::<Result<_>>()?,
            total_return: parse(&f[2 + n_agents], i)?,
            env_steps: parse(&f[3 + n_agents], i)?,
            wall_ms: parse(&f[4 + n_agents], i)?,
        });
    }
    Ok(log)
}

pub fn read_aggregate_csv<R: BufRead>(input: R) -> Result<Vec<AggregateRow>> {
    let lines = data_lines(input, AGGREGATE_SCHEMA)?;
    lines
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, f)| {
            if f.len() != 4 {
                return Err(config_err(format!("line {i}: expected 4 fields")));
            }
            Ok(AggregateRow { episode: parse(&f[0], i)?, mean: parse(&f[1], i)?, std: parse(&f[2], i)?, seeds: parse(&f[3], i)? })
        })
        .collect()
}
