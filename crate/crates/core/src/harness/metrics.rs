//! Per-episode metrics, computed from the logged frames alone.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::agent::{PED_RADIUS, ROBOT_RADIUS};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::planner::CostToGo;

use super::log::{EpisodeLog, EpisodeMeta, Frame};

pub const COLLISION_DISTANCE: f64 = ROBOT_RADIUS + PED_RADIUS + 0.05;
pub const FREEZE_SPEED: f64 = 0.05;
pub const FREEZE_DURATION: f64 = 3.0;
pub const FRONTAL_RANGE: f64 = 1.5;
pub const FRONTAL_HALF_ANGLE: f64 = std::f64::consts::FRAC_PI_3;
pub const STRIP_DEPTH: f64 = 0.5;
pub const STRIP_WIDTH: f64 = 2.0 * ROBOT_RADIUS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Share of the course covered, percent.
    pub complete_ratio: f64,
    pub success: bool,
    pub timeout: bool,
    pub collision: bool,
    pub freezing_count: u32,
    /// Mean magnitude of the robot's jerk, m/s^3.
    pub jerk: f64,
    pub frontal_interactions: u32,
    /// Pedestrian density in the strip ahead of the robot integrated over
    /// time, person s / m^2.
    pub cumulative_density: f64,
    pub execute_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
}

/// How and where an episode ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Termination {
    pub outcome: Outcome,
    pub frame: usize,
    /// Robot speed at the final frame.
    pub robot_speed: f64,
}

/// Outcome reached at this frame, if any. Collision takes precedence over
/// arrival, arrival over timeout.
pub fn classify(meta: &EpisodeMeta, f: &Frame) -> Option<Outcome> {
    let r = f.robot.pos;
    if meta.map.clearance(r) < ROBOT_RADIUS || f.peds.iter().any(|(_, p)| p.pos.distance(r) < COLLISION_DISTANCE) {
        Some(Outcome::Collision)
    } else if r.distance(meta.goal) <= meta.goal_tolerance {
        Some(Outcome::Success)
    } else if f.t >= meta.time_limit - 1e-9 {
        Some(Outcome::Timeout)
    } else {
        None
    }
}

/// Scans the frames for the first terminating event. A log that ends
/// without one is truncated.
pub fn termination(log: &EpisodeLog) -> Result<Termination> {
    if log.frames.is_empty() {
        return Err(Error::TruncatedLog("no frames".into()));
    }
    let m = &log.meta;
    for (k, f) in log.frames.iter().enumerate() {
        if k > 0 && (f.t - log.frames[k - 1].t - m.dt).abs() > 1e-6 {
            return Err(Error::TruncatedLog(format!("gap before frame {k}")));
        }
        if let Some(outcome) = classify(m, f) {
            if k + 1 != log.frames.len() {
                return Err(Error::TruncatedLog(format!("frames continue after the episode ended at frame {k}")));
            }
            return Ok(Termination { outcome, frame: k, robot_speed: f.robot.vel.norm() });
        }
    }
    Err(Error::TruncatedLog(format!("log stops at t = {} without reaching an outcome", log.frames.last().unwrap().t)))
}

/// Robot heading per frame: the velocity direction, held while at rest.
fn headings(log: &EpisodeLog) -> Vec<f64> {
    let mut h = log.meta.robot_heading;
    log.frames
        .iter()
        .map(|f| {
            if f.robot.vel.norm() > 1e-9 {
                h = f.robot.vel.angle();
            }
            h
        })
        .collect()
}

pub fn compute_metrics(log: &EpisodeLog) -> Result<MetricsRecord> {
    let end = termination(log)?;
    let m = &log.meta;
    let frames = &log.frames;
    let heads = headings(log);

    let ctg = CostToGo::new(&m.map, m.goal, 0.25)?;
    let d0 = ctg.value(frames[0].robot.pos);
    let d1 = ctg.value(frames[end.frame].robot.pos);
    let complete_ratio = if end.outcome == Outcome::Success || d0 <= m.goal_tolerance {
        100.0
    } else {
        (100.0 * (d0 - d1) / (d0 - m.goal_tolerance)).clamp(0.0, 100.0)
    };

    let mut freezing_count = 0;
    let mut still_since: Option<f64> = None;
    let mut counted = false;
    for f in frames {
        if f.robot.vel.norm() < FREEZE_SPEED {
            let since = *still_since.get_or_insert(f.t);
            if !counted && f.t - since > FREEZE_DURATION {
                freezing_count += 1;
                counted = true;
            }
        } else {
            still_since = None;
            counted = false;
        }
    }

    let mut frontal_interactions = 0;
    let mut engaged: HashMap<u32, bool> = HashMap::new();
    let mut cumulative_density = 0.0;
    let strip_area = STRIP_DEPTH * STRIP_WIDTH;
    for (k, f) in frames.iter().enumerate() {
        let h = Vec2::from_angle(heads[k]);
        let mut in_strip = 0usize;
        for (id, p) in &f.peds {
            let d = p.pos - f.robot.pos;
            let dist = d.norm();
            let frontal = dist <= FRONTAL_RANGE
                && dist > 0.0
                && d.angle_between(h) <= FRONTAL_HALF_ANGLE
                && d.dot(p.vel - f.robot.vel) < 0.0;
            // one encounter lasts until the pedestrian leaves the range
            let was = engaged.get(id).copied().unwrap_or(false);
            if frontal && !was {
                frontal_interactions += 1;
            }
            engaged.insert(*id, (was || frontal) && dist <= FRONTAL_RANGE);
            let (ahead, side) = (d.dot(h), h.cross(d));
            if ahead >= ROBOT_RADIUS && ahead <= ROBOT_RADIUS + STRIP_DEPTH && side.abs() <= STRIP_WIDTH / 2.0 {
                in_strip += 1;
            }
        }
        if k > 0 {
            cumulative_density += in_strip as f64 / strip_area * m.dt;
        }
    }

    let pos: Vec<Vec2> = frames.iter().map(|f| f.robot.pos).collect();
    let jerk = if pos.len() < 4 {
        0.0
    } else {
        let dt3 = m.dt.powi(3);
        let sum: f64 = pos.windows(4).map(|w| ((w[3] - w[2] * 3.0 + w[1] * 3.0 - w[0]) / dt3).norm()).sum();
        sum / (pos.len() - 3) as f64
    };

    Ok(MetricsRecord {
        complete_ratio,
        success: end.outcome == Outcome::Success,
        timeout: end.outcome == Outcome::Timeout,
        collision: end.outcome == Outcome::Collision,
        freezing_count,
        jerk,
        frontal_interactions,
        cumulative_density,
        execute_time: frames[end.frame].t,
    })
}
