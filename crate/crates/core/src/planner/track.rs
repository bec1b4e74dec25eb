//! Feedback tracking of a chosen primitive.

use crate::agent::RobotState;
use crate::geom::{wrap_angle, Vec2};

use super::config::PlannerConfig;
use super::primitive::{Control, MotionPrimitive};

const K_ALONG: f64 = 1.0;
const K_SPEED: f64 = 1.0;
const K_HEADING: f64 = 2.0;
const K_LATERAL: f64 = 1.5;

/// Feedforward control of the reference plus feedback on the along-track,
/// lateral, heading and speed errors to the reference state at the robot's
/// current time, clamped to the control bounds.
pub fn track(reference: &MotionPrimitive, state: &RobotState, dt: f64, cfg: &PlannerConfig) -> Control {
    debug_assert!(dt > 0.0 && dt <= 0.1 + 1e-12);
    let (r, ff) = reference.reference_at(state.time);
    let h = Vec2::from_angle(state.heading);
    let e = r.pos - state.pos;
    let along = e.dot(h);
    let lateral = h.cross(e);
    let accel = ff.accel + K_SPEED * (r.speed - state.speed) + K_ALONG * along;
    let omega = ff.omega + K_HEADING * wrap_angle(r.heading - state.heading) + K_LATERAL * lateral;
    Control::new(accel, omega).clamped(cfg.a_max, cfg.omega_max)
}
