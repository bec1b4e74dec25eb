//! Robot and pedestrian state.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::Vec2;

/// Robot footprint radius in meters.
pub const ROBOT_RADIUS: f64 = 0.4;
/// Pedestrian footprint radius in meters.
pub const PED_RADIUS: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pos: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub time: f64,
}

impl RobotState {
    pub fn new(pos: Vec2, heading: f64, speed: f64, time: f64) -> Self {
        RobotState { pos, heading, speed, time }
    }

    pub fn at_rest(pos: Vec2, heading: f64) -> Self {
        Self::new(pos, heading, 0.0, 0.0)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * self.speed
    }

    pub fn validate(&self, v_max: f64) -> Result<()> {
        if !self.pos.is_finite() || !self.heading.is_finite() || !self.time.is_finite() {
            return Err(invalid("robot state must be finite"));
        }
        if !(0.0..=v_max + 1e-9).contains(&self.speed) {
            return Err(invalid(format!("robot speed {} outside [0, {v_max}]", self.speed)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u32,
    pub pos: Vec2,
    pub vel: Vec2,
    pub goal: Vec2,
    pub pref_speed: f64,
    pub heading: f64,
    pub gaze_dir: Vec2,
    pub radius: f64,
}

impl Pedestrian {
    /// A pedestrian at `pos` walking toward `goal`, looking where it walks.
    pub fn new(id: u32, pos: Vec2, goal: Vec2, pref_speed: f64) -> Self {
        let dir = (goal - pos).normalized().unwrap_or(Vec2::new(1.0, 0.0));
        Pedestrian {
            id,
            pos,
            vel: dir * pref_speed,
            goal,
            pref_speed,
            heading: dir.angle(),
            gaze_dir: dir,
            radius: PED_RADIUS,
        }
    }

    pub fn with_velocity(mut self, vel: Vec2) -> Self {
        self.vel = vel;
        if let Some(d) = vel.normalized() {
            self.heading = d.angle();
            self.gaze_dir = d;
        }
        self
    }

    /// Velocity the pedestrian would like to have right now.
    pub fn desired_velocity(&self) -> Vec2 {
        (self.goal - self.pos).normalized().map_or(Vec2::ZERO, |d| d * self.pref_speed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pref_speed > 0.0) {
            return Err(invalid(format!("pedestrian {} needs pref_speed > 0", self.id)));
        }
        if (self.gaze_dir.norm() - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("pedestrian {} gaze direction is not unit", self.id)));
        }
        if !(self.radius > 0.0) || !self.pos.is_finite() || !self.vel.is_finite() {
            return Err(invalid(format!("pedestrian {} has invalid geometry", self.id)));
        }
        Ok(())
    }
}
