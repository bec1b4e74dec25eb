//! Unicycle motion primitives.

use serde::{Deserialize, Serialize};

use crate::agent::RobotState;
use crate::error::Result;
use crate::geom::Vec2;
use crate::traj::Trajectory;

/// Integration step of the unicycle model.
pub const SUBSTEP: f64 = 0.05;
/// Substeps between stored trajectory samples.
pub const SUBSTEPS_PER_SAMPLE: usize = 5;

/// Linear acceleration and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Control {
    pub accel: f64,
    pub omega: f64,
}

impl Control {
    pub fn new(accel: f64, omega: f64) -> Self {
        Control { accel, omega }
    }

    pub fn clamped(self, a_max: f64, omega_max: f64) -> Self {
        Control { accel: self.accel.clamp(-a_max, a_max), omega: self.omega.clamp(-omega_max, omega_max) }
    }
}

/// One integration step. Speed saturates in `[0, v_max]`; position uses the
/// midpoint heading and speed.
pub fn step_unicycle(s: &RobotState, u: Control, dt: f64, v_max: f64) -> RobotState {
    let mut v1 = (s.speed + u.accel * dt).clamp(0.0, v_max);
    if v1 < 1e-12 {
        // round-off from repeated braking
        v1 = 0.0;
    }
    let th1 = s.heading + u.omega * dt;
    let v_mid = 0.5 * (s.speed + v1);
    let th_mid = s.heading + 0.5 * u.omega * dt;
    RobotState { pos: s.pos + Vec2::from_angle(th_mid) * (v_mid * dt), heading: th1, speed: v1, time: s.time + dt }
}

/// Piecewise-constant control sequence (one control per substep) and the
/// states it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPrimitive {
    pub controls: Vec<Control>,
    /// `controls.len() + 1` states, starting with the initial state.
    pub states: Vec<RobotState>,
    pub trajectory: Trajectory,
    pub end_state: RobotState,
    pub v_max: f64,
}

impl MotionPrimitive {
    pub fn from_controls(start: RobotState, controls: Vec<Control>, v_max: f64) -> Result<Self> {
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(start);
        for u in &controls {
            let next = step_unicycle(states.last().unwrap(), *u, SUBSTEP, v_max);
            states.push(next);
        }
        let pts: Vec<Vec2> = states.iter().skip(SUBSTEPS_PER_SAMPLE).step_by(SUBSTEPS_PER_SAMPLE).map(|s| s.pos).collect();
        let dt = SUBSTEP * SUBSTEPS_PER_SAMPLE as f64;
        let trajectory = if pts.is_empty() {
            Trajectory::new(start.time + dt, dt, vec![start.pos])?
        } else {
            Trajectory::new(start.time + dt, dt, pts)?
        };
        let end_state = *states.last().unwrap();
        Ok(MotionPrimitive { controls, states, trajectory, end_state, v_max })
    }

    /// Constant control held for `duration` seconds.
    pub fn constant(start: RobotState, u: Control, duration: f64, v_max: f64) -> Result<Self> {
        let n = (duration / SUBSTEP).round() as usize;
        Self::from_controls(start, vec![u; n], v_max)
    }

    /// Full braking, straight ahead, padded to `duration`.
    pub fn stop(start: RobotState, a_max: f64, duration: f64, v_max: f64) -> Result<Self> {
        Self::constant(start, Control::new(-a_max, 0.0), duration, v_max)
    }

    pub fn start(&self) -> RobotState {
        self.states[0]
    }

    pub fn duration(&self) -> f64 {
        self.controls.len() as f64 * SUBSTEP
    }

    /// Reference state at absolute time `t` (clamped to the primitive), with
    /// the control active at that time.
    pub fn reference_at(&self, t: f64) -> (RobotState, Control) {
        let rel = ((t - self.states[0].time) / SUBSTEP).max(0.0);
        let k = rel.floor() as usize;
        if k >= self.controls.len() {
            let last = *self.states.last().unwrap();
            return (last, Control::default());
        }
        let u = self.controls[k];
        let frac = (rel - k as f64) * SUBSTEP;
        let s = if frac > 0.0 { step_unicycle(&self.states[k], u, frac, self.v_max) } else { self.states[k] };
        (s, u)
    }

    /// Drops the first `t` seconds (rounded to whole substeps), holds the
    /// last control with zero acceleration to keep the duration, and
    /// re-integrates from `from`.
    pub fn shifted(&self, from: RobotState, t: f64, v_max: f64) -> Result<Self> {
        let skip = ((t / SUBSTEP).round() as usize).min(self.controls.len());
        let mut controls: Vec<Control> = self.controls[skip..].to_vec();
        let pad = Control::new(0.0, 0.0);
        controls.resize(self.controls.len(), pad);
        Self::from_controls(from, controls, v_max)
    }

    /// Whether the robot comes to rest within this primitive.
    pub fn stops(&self) -> bool {
        self.end_state.speed == 0.0
    }
}

/// Braking at `a_max` while turning at `omega` until at rest.
pub fn brake(start: RobotState, a_max: f64, omega: f64, v_max: f64) -> Result<MotionPrimitive> {
    let n = ((start.speed / a_max) / SUBSTEP - 1e-9).ceil().max(0.0) as usize;
    MotionPrimitive::from_controls(start, vec![Control::new(-a_max, omega); n], v_max)
}
