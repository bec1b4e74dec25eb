//! Episode logs and their replay-file form.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::crowdsim::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::map::StaticMap;
use crate::planner::PlannerConfig;

/// Position and velocity of one agent at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSample {
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub robot: AgentSample,
    pub peds: Vec<(u32, AgentSample)>,
}

/// Everything besides the frames needed to score an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub scenario: ScenarioConfig,
    pub planner: PlannerConfig,
    pub seed: u64,
    pub map: StaticMap,
    pub goal: Vec2,
    pub robot_heading: f64,
    pub dt: f64,
    pub time_limit: f64,
    pub goal_tolerance: f64,
}

/// Summary of one planning cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub t: f64,
    pub chosen: Option<usize>,
    pub freeze: bool,
    pub candidates: usize,
    pub safe: usize,
    /// Debug cost table rows, when recorded.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<String>,
    /// Sampled positions of the primitive the robot committed to.
    #[serde(default)]
    pub path: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub meta: EpisodeMeta,
    pub frames: Vec<Frame>,
    pub cycles: Vec<CycleRecord>,
}

pub const REPLAY_HEADER: &str = "t,agent,x,y,vx,vy";

impl EpisodeLog {
    /// Writes one `t,agent,x,y,vx,vy` row per agent and frame; the robot's
    /// agent field is `robot`.
    pub fn write_replay_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{REPLAY_HEADER}")?;
        for f in &self.frames {
            let r = f.robot;
            writeln!(w, "{},robot,{},{},{},{}", f.t, r.pos.x, r.pos.y, r.vel.x, r.vel.y)?;
            for (id, p) in &f.peds {
                writeln!(w, "{},{id},{},{},{},{}", f.t, p.pos.x, p.pos.y, p.vel.x, p.vel.y)?;
            }
        }
        Ok(())
    }

    pub fn write_meta_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.meta)?;
        Ok(())
    }

    /// Rebuilds a log (without cycle records) from replay rows and metadata.
    /// Floats written by [`EpisodeLog::write_replay_csv`] parse back exactly.
    pub fn read_replay<R: BufRead>(meta: EpisodeMeta, csv: R) -> Result<Self> {
        let mut frames: Vec<Frame> = Vec::new();
        for (n, line) in csv.lines().enumerate() {
            let line = line?;
            if n == 0 {
                if line.trim() != REPLAY_HEADER {
                    return Err(Error::TruncatedLog(format!("unexpected replay header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(Error::TruncatedLog(format!("line {}: expected 6 columns", n + 1)));
            }
            let num = |i: usize| -> Result<f64> {
                cols[i].trim().parse::<f64>().map_err(|e| Error::TruncatedLog(format!("line {}: {e}", n + 1)))
            };
            let t = num(0)?;
            let s = AgentSample { pos: Vec2::new(num(2)?, num(3)?), vel: Vec2::new(num(4)?, num(5)?) };
            if cols[1] == "robot" {
                frames.push(Frame { t, robot: s, peds: Vec::new() });
            } else {
                let id: u32 = cols[1].parse().map_err(|_| Error::TruncatedLog(format!("line {}: bad agent", n + 1)))?;
                match frames.last_mut() {
                    Some(f) if f.t == t => f.peds.push((id, s)),
                    _ => return Err(Error::TruncatedLog(format!("line {}: pedestrian row before robot row", n + 1))),
                }
            }
        }
        Ok(EpisodeLog { meta, frames, cycles: Vec::new() })
    }
}
