//! Pedestrian world simulation: scenario generation, social-force stepping
//! and the geometric awareness model.

mod config;
mod scenario;
mod world;

pub use config::{parse_config_text, Direction, PedMode, ScenarioConfig, ScenarioKind};
pub use scenario::{spawn, Lane, Layout};
pub use world::{WorldState, GAZE_PERIOD, MAX_PED_SPEED};

use crate::agent::Pedestrian;
use crate::geom::Vec2;

/// Half-angle of the body field of view.
pub const BODY_CONE: f64 = std::f64::consts::FRAC_PI_2;
pub const BODY_RANGE: f64 = 10.0;
/// Half-angle of the gaze cone.
pub const GAZE_CONE: f64 = std::f64::consts::FRAC_PI_3;
pub const GAZE_RANGE: f64 = 20.0;

/// Whether pedestrian `p` notices a robot at `robot_pos`: the robot lies in
/// the body cone (within 90 degrees of the heading, up to 10 m) or in the
/// gaze cone (within 60 degrees of the gaze, up to 20 m).
pub fn awareness_check(p: &Pedestrian, robot_pos: Vec2) -> bool {
    let d = robot_pos - p.pos;
    let dist = d.norm();
    if dist == 0.0 {
        return true;
    }
    let body = dist <= BODY_RANGE && d.angle_between(Vec2::from_angle(p.heading)) <= BODY_CONE + 1e-12;
    let gaze = dist <= GAZE_RANGE && d.angle_between(p.gaze_dir) <= GAZE_CONE + 1e-12;
    body || gaze
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::RobotState;
    use crate::geom::Rect;
    use crate::map::StaticMap;

    fn walker(heading: f64, gaze: f64) -> Pedestrian {
        let mut p = Pedestrian::new(0, Vec2::ZERO, Vec2::new(100.0, 0.0), 1.2);
        p.heading = heading;
        p.gaze_dir = Vec2::from_angle(gaze);
        p
    }

    #[test]
    fn awareness_examples() {
        let p = walker(0.0, 0.0);
        assert!(awareness_check(&p, Vec2::new(5.0, 0.0)));
        assert!(!awareness_check(&p, Vec2::new(-5.0, 0.0)));
        assert!(awareness_check(&p, Vec2::new(12.0, 0.0)));
        assert!(!awareness_check(&p, Vec2::new(25.0, 0.0)));
        // side-looking pedestrian sees 12 m to its left only through the gaze cone
        let q = walker(0.0, FRAC_PI_2);
        assert!(awareness_check(&q, Vec2::new(0.0, 12.0)));
        assert!(!awareness_check(&walker(0.0, 0.0), Vec2::new(0.0, 12.0)));
        assert!(awareness_check(&walker(0.0, 0.0), Vec2::new(0.0, 8.0)));
    }

    use std::f64::consts::FRAC_PI_2;

    fn open_world(peds: Vec<Pedestrian>, robot: RobotState) -> WorldState {
        let map = StaticMap::open(Rect::new(Vec2::new(-30.0, -30.0), Vec2::new(30.0, 30.0)));
        WorldState::custom(map, peds, robot, Vec2::new(25.0, 0.0), 5)
    }

    #[test]
    fn lone_pedestrian_reaches_preferred_speed() {
        let mut p = Pedestrian::new(0, Vec2::new(-20.0, 0.0), Vec2::new(20.0, 3.0), 1.3);
        p.vel = Vec2::ZERO;
        let mut w = open_world(vec![p], RobotState::at_rest(Vec2::new(0.0, -29.0), 0.0));
        for _ in 0..40 {
            w.step_mut(0.05, true);
        }
        let p = &w.peds[0];
        let want = (p.goal - p.pos).normalized().unwrap() * 1.3;
        assert!((p.vel - want).norm() < 0.02 * 1.3, "velocity {:?} vs {:?}", p.vel, want);
    }

    #[test]
    fn head_on_pair_is_point_symmetric() {
        let a = Pedestrian::new(0, Vec2::new(-5.0, 0.0), Vec2::new(25.0, 0.0), 1.2);
        let b = Pedestrian::new(1, Vec2::new(5.0, 0.0), Vec2::new(-25.0, 0.0), 1.2);
        // robot at the origin of the reflection, invisible to keep the forces symmetric
        let mut w = open_world(vec![a, b], RobotState::at_rest(Vec2::new(0.0, 0.0), 0.0));
        let mut max_lateral: f64 = 0.0;
        for _ in 0..200 {
            w.step_mut(0.05, false);
            let (pa, pb) = (w.peds[0].pos, w.peds[1].pos);
            assert!((pa + pb).norm() < 1e-9);
            max_lateral = max_lateral.max(pa.y.abs());
        }
        assert!(max_lateral > 0.2, "pedestrians never side-stepped");
        assert!(w.peds[0].pos.x > 5.0 && w.peds[1].pos.x < -5.0);
    }

    #[test]
    fn invisible_robot_changes_nothing() {
        let cfg = ScenarioConfig::new(ScenarioKind::NC, Direction::UT, 15, 11);
        let mut with_robot = spawn(&cfg).unwrap();
        let mut without = with_robot.clone();
        without.robot.pos = Vec2::new(-1000.0, -1000.0);
        for k in 0..200 {
            with_robot.robot.pos = Vec2::new(2.0 + 0.05 * k as f64, 2.0);
            with_robot.step_mut(0.05, false);
            without.step_mut(0.05, false);
        }
        assert_eq!(with_robot.peds, without.peds);
    }

    #[test]
    fn pedestrians_stay_out_of_obstacles() {
        for kind in [ScenarioKind::FI, ScenarioKind::BA] {
            let cfg = ScenarioConfig::new(kind, Direction::DT, 20, 4).with_counterflow(true);
            let mut w = spawn(&cfg).unwrap();
            for _ in 0..600 {
                w.step_mut(0.05, true);
                for p in &w.peds {
                    assert!(w.map().is_free(p.pos), "{:?} pedestrian at {:?}", kind, p.pos);
                }
            }
        }
    }
}
