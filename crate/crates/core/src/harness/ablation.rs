//! One-parameter sweeps over the planner configuration.

use serde::{Deserialize, Serialize};

use crate::crowdsim::ScenarioConfig;
use crate::error::{invalid, Result};
use crate::planner::PlannerConfig;

use super::suite::{run_suite, AggregateRow, SuiteCell, SuiteOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationKind {
    /// Maximum robot speed, m/s.
    Speed,
    /// Planning horizon, s. Zero keeps the base horizon and drops the
    /// individual disturbance term.
    Horizon,
    /// Weight of the individual term relative to a unit flow term.
    Ratio,
}

impl AblationKind {
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            AblationKind::Speed => (0..6).map(|k| 1.0 + 0.25 * k as f64).collect(),
            AblationKind::Horizon => (0..=5).map(f64::from).collect(),
            AblationKind::Ratio => (1..=9).map(f64::from).collect(),
        }
    }

    /// The planner configuration at one grid value.
    pub fn apply(self, base: &PlannerConfig, value: f64) -> PlannerConfig {
        let mut p = *base;
        match self {
            AblationKind::Speed => p.v_max = value,
            AblationKind::Horizon if value == 0.0 => p.idp_enabled = false,
            AblationKind::Horizon => {
                p.horizon = value;
                p.flow_horizon = p.flow_horizon.max(value);
            }
            AblationKind::Ratio => {
                p.w_idp = value;
                p.w_fdp = 1.0;
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub kind: AblationKind,
    pub value: f64,
    /// Pooled over every base scenario at this grid value.
    pub aggregate: AggregateRow,
}

impl AblationRow {
    pub const HEADER: &'static str =
        "kind,value,episodes,failures,success_rate,timeout_rate,collision_rate,execute_time,freezing_num,frontal_num";

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let a = &self.aggregate;
        writeln!(
            w,
            "{:?},{},{},{},{},{},{},{},{},{}",
            self.kind,
            self.value,
            a.episodes,
            a.failures,
            a.success_rate,
            a.timeout_rate,
            a.collision_rate,
            a.execute_time.map(|t| t.to_string()).unwrap_or_default(),
            a.freezing_num,
            a.frontal_num
        )
    }
}

pub fn run_ablation(
    kind: AblationKind,
    grid: &[f64],
    scenarios: &[ScenarioConfig],
    planner: &PlannerConfig,
    seeds: &[u64],
    opts: SuiteOptions,
) -> Result<Vec<AblationRow>> {
    if grid.is_empty() || scenarios.is_empty() {
        return Err(invalid("ablation needs a nonempty grid and at least one scenario"));
    }
    let mut cells = Vec::new();
    for &v in grid {
        let p = kind.apply(planner, v);
        p.validate()?;
        for s in scenarios {
            cells.push(SuiteCell::new(s.clone(), p, &format!("{kind:?}={v}")));
        }
    }
    let res = run_suite(&cells, seeds, opts)?;
    let per_point = scenarios.len();
    Ok(grid
        .iter()
        .enumerate()
        .map(|(g, &value)| {
            let runs: Vec<_> =
                res.episodes.iter().filter(|e| e.cell / per_point == g).map(|e| e.metrics).collect();
            AblationRow { kind, value, aggregate: AggregateRow::from_runs(&format!("{kind:?}={value}"), &runs) }
        })
        .collect())
}
