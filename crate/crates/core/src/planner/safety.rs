//! Passive-safety filter and post-hoc collision check.

use crate::agent::{Pedestrian, RobotState, PED_RADIUS, ROBOT_RADIUS};
use crate::error::Result;
use crate::geom::min_distance_linear_motion;
use crate::map::StaticMap;
use crate::traj::Trajectory;

use super::config::PlannerConfig;
use super::primitive::{brake, Control, MotionPrimitive};

/// Yaw rates tried while braking, as fractions of `omega_max`.
pub const BRAKE_OFFSETS: [f64; 5] = [0.0, -0.5, 0.5, -1.0, 1.0];

/// Whether the robot sweeping through `states` comes within `clearance` of
/// any pedestrian extrapolated at constant velocity from time `t_now`, or
/// closer than its radius to the static map. Contact while the robot is at
/// rest does not count.
pub fn sweep_collides(states: &[RobotState], peds: &[Pedestrian], t_now: f64, clearance: f64, map: &StaticMap) -> bool {
    if states.is_empty() {
        return false;
    }
    if map.clearance(states[0].pos) < ROBOT_RADIUS {
        return true;
    }
    let span = states.last().unwrap().time - t_now;
    let reach: f64 = states.windows(2).map(|w| w[0].pos.distance(w[1].pos)).sum();
    let origin = states[0].pos;
    let near: Vec<&Pedestrian> = peds
        .iter()
        .filter(|p| p.pos.distance(origin) <= reach + p.vel.norm() * span.max(0.0) + clearance + 1e-9)
        .collect();
    for p in &near {
        let at0 = p.pos + p.vel * (states[0].time - t_now);
        if states[0].speed > 0.0 && at0.distance(states[0].pos) < clearance {
            return true;
        }
    }
    for w in states.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.speed == 0.0 && b.speed == 0.0 {
            continue;
        }
        if a.pos != b.pos && !map.segment_free(a.pos, b.pos, ROBOT_RADIUS) {
            return true;
        }
        for p in &near {
            let pa = p.pos + p.vel * (a.time - t_now);
            let pb = p.pos + p.vel * (b.time - t_now);
            if min_distance_linear_motion(a.pos, b.pos, pa, pb) < clearance {
                return true;
            }
        }
    }
    false
}

/// Clearance the safety filter demands between robot and pedestrian centres.
pub fn safety_clearance(cfg: &PlannerConfig) -> f64 {
    ROBOT_RADIUS + PED_RADIUS + cfg.safety_margin
}

/// Number of substeps in the guaranteed-safe prefix.
pub fn safe_prefix_len(p: &MotionPrimitive, cfg: &PlannerConfig) -> usize {
    ((cfg.safe_fraction * p.controls.len() as f64).ceil() as usize).min(p.controls.len())
}

/// The braking manoeuvre that certifies `p`, if any: its safe prefix is
/// collision-free and some full-braking escape from the prefix end reaches
/// rest without collision. Returns the prefix followed by that brake as one
/// primitive of the same duration.
pub fn certify(p: &MotionPrimitive, peds: &[Pedestrian], map: &StaticMap, cfg: &PlannerConfig) -> Result<Option<MotionPrimitive>> {
    let t_now = p.start().time;
    let clearance = safety_clearance(cfg);
    let n = safe_prefix_len(p, cfg);
    if sweep_collides(&p.states[..=n], peds, t_now, clearance, map) {
        return Ok(None);
    }
    let end = p.states[n];
    for f in BRAKE_OFFSETS {
        let b = brake(end, cfg.a_max, f * cfg.omega_max, cfg.v_max)?;
        if !sweep_collides(&b.states, peds, t_now, clearance, map) {
            let mut controls: Vec<Control> = p.controls[..n].to_vec();
            controls.extend_from_slice(&b.controls);
            controls.resize(p.controls.len().max(controls.len()), Control::new(-cfg.a_max, 0.0));
            return Ok(Some(MotionPrimitive::from_controls(p.start(), controls, cfg.v_max)?));
        }
    }
    Ok(None)
}

/// Passive safety of `p` against constant-velocity pedestrians.
pub fn passive_safety_check(p: &MotionPrimitive, peds: &[Pedestrian], map: &StaticMap, cfg: &PlannerConfig) -> bool {
    matches!(certify(p, peds, map, cfg), Ok(Some(_)))
}

/// False iff some predicted pedestrian trajectory comes within the sum of
/// the footprint radii of `robot` at a shared timestamp.
pub fn post_collision_check(robot: &Trajectory, predicted: &[&Trajectory]) -> bool {
    let limit = ROBOT_RADIUS + PED_RADIUS;
    predicted.iter().all(|t| {
        (0..robot.len()).all(|k| {
            let time = robot.time_at(k);
            let j = ((time - t.t0()) / t.dt()).round();
            if j < 0.0 || j as usize >= t.len() || (t.time_at(j as usize) - time).abs() > 1e-6 {
                return true;
            }
            robot.point(k).distance(t.point(j as usize)) >= limit
        })
    })
}
