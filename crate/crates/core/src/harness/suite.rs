//! Batches of episodes over a scenario × planner matrix and their
//! aggregate tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crowdsim::ScenarioConfig;
use crate::error::{invalid, Result};
use crate::planner::PlannerConfig;

use super::episode::{run_episode, EpisodeLimits};
use super::log::EpisodeLog;
use super::metrics::MetricsRecord;

/// Default number of repeats per cell.
pub const DEFAULT_REPEATS: usize = 40;

/// One configuration of the matrix. The scenario's own seed is replaced by
/// each entry of the suite's seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCell {
    pub label: String,
    pub scenario: ScenarioConfig,
    pub planner: PlannerConfig,
}

impl SuiteCell {
    pub fn new(scenario: ScenarioConfig, planner: PlannerConfig, planner_label: &str) -> Self {
        SuiteCell { label: format!("{}/{planner_label}", scenario.label()), scenario, planner }
    }
}

/// `repeats` consecutive seeds starting at `base`.
pub fn seed_list(base: u64, repeats: usize) -> Vec<u64> {
    (0..repeats as u64).map(|k| base.wrapping_add(k)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub cell: usize,
    pub seed: u64,
    pub metrics: Option<MetricsRecord>,
    pub error: Option<String>,
    #[serde(skip)]
    pub log: Option<EpisodeLog>,
}

/// Per-cell aggregate in table column order. Rates are percentages of all
/// repeats; freezing and frontal counts are summed over the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub label: String,
    pub episodes: usize,
    pub failures: usize,
    pub complete_ratio: f64,
    pub success_rate: f64,
    pub timeout_rate: f64,
    pub collision_rate: f64,
    pub freezing_num: u32,
    pub jerk: f64,
    pub frontal_num: u32,
    pub density: f64,
    /// Mean over successful episodes; absent when none succeeded.
    pub execute_time: Option<f64>,
}

impl AggregateRow {
    pub const HEADER: &'static str = "label,episodes,failures,complete_ratio,success_rate,timeout_rate,collision_rate,freezing_num,jerk,frontal_num,density,execute_time";

    /// Aggregates one cell. `runs` holds one entry per repeat; `None` marks
    /// an episode that failed to run.
    pub fn from_runs(label: &str, runs: &[Option<MetricsRecord>]) -> AggregateRow {
        let ok: Vec<&MetricsRecord> = runs.iter().flatten().collect();
        let n = runs.len().max(1) as f64;
        let rate = |f: &dyn Fn(&MetricsRecord) -> bool| ok.iter().filter(|m| f(m)).count() as f64 / n * 100.0;
        let mean = |f: &dyn Fn(&MetricsRecord) -> f64| {
            if ok.is_empty() {
                0.0
            } else {
                ok.iter().map(|m| f(m)).sum::<f64>() / ok.len() as f64
            }
        };
        let wins: Vec<f64> = ok.iter().filter(|m| m.success).map(|m| m.execute_time).collect();
        AggregateRow {
            label: label.to_string(),
            episodes: runs.len(),
            failures: runs.len() - ok.len(),
            complete_ratio: mean(&|m| m.complete_ratio),
            success_rate: rate(&|m| m.success),
            timeout_rate: rate(&|m| m.timeout),
            collision_rate: rate(&|m| m.collision),
            freezing_num: ok.iter().map(|m| m.freezing_count).sum(),
            jerk: mean(&|m| m.jerk),
            frontal_num: ok.iter().map(|m| m.frontal_interactions).sum(),
            density: mean(&|m| m.cumulative_density),
            execute_time: (!wins.is_empty()).then(|| wins.iter().sum::<f64>() / wins.len() as f64),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.label,
            self.episodes,
            self.failures,
            self.complete_ratio,
            self.success_rate,
            self.timeout_rate,
            self.collision_rate,
            self.freezing_num,
            self.jerk,
            self.frontal_num,
            self.density,
            self.execute_time.map(|t| t.to_string()).unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SuiteResult {
    pub cells: Vec<SuiteCell>,
    pub seeds: Vec<u64>,
    pub episodes: Vec<EpisodeRecord>,
    pub aggregates: Vec<AggregateRow>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    pub limits: EpisodeLimits,
    /// Keep full episode logs, e.g. for replay output.
    pub keep_logs: bool,
}

pub const METRICS_HEADER: &str = "cell,label,seed,status,complete_ratio,success,timeout,collision,freezing_count,jerk,frontal_interactions,cumulative_density,execute_time";

/// Runs every cell once per seed, in parallel across episodes. An episode
/// that errors is recorded and the suite carries on.
pub fn run_suite(cells: &[SuiteCell], seeds: &[u64], opts: SuiteOptions) -> Result<SuiteResult> {
    if seeds.is_empty() {
        return Err(invalid("a suite needs at least one repeat"));
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| seeds.iter().map(move |s| (c, *s))).collect();
    let episodes: Vec<EpisodeRecord> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let scenario = ScenarioConfig { seed, ..cells[c].scenario.clone() };
            match run_episode(&scenario, &cells[c].planner, opts.limits) {
                Ok(ep) => EpisodeRecord {
                    cell: c,
                    seed,
                    metrics: Some(ep.metrics),
                    error: None,
                    log: opts.keep_logs.then_some(ep.log),
                },
                Err(e) => EpisodeRecord { cell: c, seed, metrics: None, error: Some(e.to_string()), log: None },
            }
        })
        .collect();
    let aggregates = aggregate(cells, &episodes);
    Ok(SuiteResult { cells: cells.to_vec(), seeds: seeds.to_vec(), episodes, aggregates })
}

/// Aggregate rows, one per cell, from per-episode records.
pub fn aggregate(cells: &[SuiteCell], episodes: &[EpisodeRecord]) -> Vec<AggregateRow> {
    cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let runs: Vec<Option<MetricsRecord>> =
                episodes.iter().filter(|e| e.cell == c).map(|e| e.metrics).collect();
            AggregateRow::from_runs(&cell.label, &runs)
        })
        .collect()
}

impl SuiteResult {
    pub fn write_metrics_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{METRICS_HEADER}")?;
        for e in &self.episodes {
            let label = &self.cells[e.cell].label;
            match &e.metrics {
                Some(m) => writeln!(
                    w,
                    "{},{label},{},ok,{},{},{},{},{},{},{},{},{}",
                    e.cell,
                    e.seed,
                    m.complete_ratio,
                    m.success as u8,
                    m.timeout as u8,
                    m.collision as u8,
                    m.freezing_count,
                    m.jerk,
                    m.frontal_interactions,
                    m.cumulative_density,
                    m.execute_time
                )?,
                None => writeln!(w, "{},{label},{},error,,,,,,,,,", e.cell, e.seed)?,
            }
        }
        Ok(())
    }

    pub fn write_aggregate_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", AggregateRow::HEADER)?;
        for a in &self.aggregates {
            a.write_csv(&mut w)?;
        }
        Ok(())
    }

    /// Writes `replay/<cell>_<seed>.csv` and the matching `.json` metadata
    /// for every kept log.
    pub fn write_replays(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for e in &self.episodes {
            if let Some(log) = &e.log {
                let stem = format!("{}_{}", e.cell, e.seed);
                log.write_replay_csv(std::io::BufWriter::new(fs::File::create(dir.join(format!("{stem}.csv")))?))?;
                log.write_meta_json(std::io::BufWriter::new(fs::File::create(dir.join(format!("{stem}.json")))?))?;
            }
        }
        Ok(())
    }
}
