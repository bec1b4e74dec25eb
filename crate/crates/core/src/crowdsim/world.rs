//! World state and social-force stepping.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::agent::{Pedestrian, RobotState, ROBOT_RADIUS};
use crate::geom::Vec2;
use crate::map::StaticMap;
use crate::rng::Rng;

use super::config::PedMode;
use super::scenario::{random_on, Layout};
use super::awareness_check;

/// Pedestrian speed cap in m/s.
pub const MAX_PED_SPEED: f64 = 1.8;
/// Interval between gaze resamples in seconds.
pub const GAZE_PERIOD: f64 = 2.0;
/// Probability that a pedestrian looks where it walks.
pub const GAZE_ALONG_HEADING: f64 = 0.8;

const GOAL_RELAX: f64 = 0.5;
const PED_REPULSION: f64 = 2.0;
const PED_RANGE: f64 = 0.8;
const OBSTACLE_REPULSION: f64 = 4.0;
const OBSTACLE_RANGE: f64 = 0.4;
const ROBOT_REPULSION: f64 = 2.0;
const ROBOT_RANGE: f64 = 1.0;
/// Weight of interactions with agents behind a pedestrian.
const ANISOTROPY: f64 = 0.35;
/// Share of the repulsion turned sideways when someone is ahead: away from
/// their side, or to the walker's right when they are dead ahead.
const PASS_RIGHT: f64 = 0.5;
/// Contact force per metre of overlap, m/s^2 per m.
const BODY_STIFFNESS: f64 = 100.0;
const MAX_ACCEL: f64 = 10.0;
const INTERACTION_CUTOFF: f64 = 5.0;
/// How far ahead pedestrians extrapolate the robot's motion, s.
const ANTICIPATION: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct WorldState {
    pub time: f64,
    pub peds: Vec<Pedestrian>,
    pub robot: RobotState,
    layout: Arc<Layout>,
    lanes: Vec<(usize, Vec2)>,
    gaze_offsets: Vec<f64>,
    rng: Rng,
}

impl WorldState {
    pub(crate) fn from_parts(
        layout: Arc<Layout>,
        peds: Vec<Pedestrian>,
        lanes: Vec<(usize, Vec2)>,
        robot: RobotState,
        rng: Rng,
    ) -> Self {
        let n = peds.len();
        WorldState { time: 0.0, peds, robot, layout, lanes, gaze_offsets: vec![0.0; n], rng }
    }

    /// A world with hand-placed pedestrians who keep walking toward their
    /// current goals and are never recycled.
    pub fn custom(map: StaticMap, peds: Vec<Pedestrian>, robot: RobotState, robot_goal: Vec2, seed: u64) -> Self {
        use super::config::ScenarioConfig;
        use super::scenario::Lane;
        use crate::geom::Rect;
        let mut config = ScenarioConfig { recycle: false, seed, ped_count: peds.len().max(1), ..Default::default() };
        config.kind = super::config::ScenarioKind::OPEN;
        let b = map.bounds();
        let lanes = peds
            .iter()
            .map(|p| Lane { region: Rect::new(b.min, b.max), entry: (p.pos, p.pos), exit: (p.goal, p.goal), via: None })
            .collect();
        let layout = Layout {
            config,
            map,
            robot_start: robot.pos,
            robot_heading: robot.heading,
            robot_goal,
            lanes,
        };
        let lane_ids = peds.iter().enumerate().map(|(k, p)| (k, p.goal)).collect();
        Self::from_parts(Arc::new(layout), peds, lane_ids, robot, Rng::new(seed).fork(2))
    }

    pub fn with_ped_mode(mut self, mode: PedMode) -> Self {
        Arc::make_mut(&mut self.layout).config.ped_mode = mode;
        self
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn map(&self) -> &StaticMap {
        &self.layout.map
    }

    pub fn robot_goal(&self) -> Vec2 {
        self.layout.robot_goal
    }

    pub fn ped_mode(&self) -> PedMode {
        self.layout.config.ped_mode
    }

    /// Each pedestrian's final destination (its `goal` field may hold an
    /// intermediate waypoint).
    pub fn final_goals(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.lanes.iter().map(|l| l.1)
    }

    /// Advances the pedestrians by `dt` seconds; the robot is left as is.
    pub fn step(&self, dt: f64, robot_visible: bool) -> WorldState {
        let mut w = self.clone();
        w.step_mut(dt, robot_visible);
        w
    }

    pub fn step_mut(&mut self, dt: f64, robot_visible: bool) {
        assert!(dt > 0.0 && dt <= 0.1 + 1e-12, "simulation step {dt} outside (0, 0.1]");
        match self.layout.config.ped_mode {
            PedMode::SocialForce => self.social_force_step(dt, robot_visible),
            PedMode::ConstantVelocity => {
                for p in &mut self.peds {
                    p.pos += p.vel * dt;
                }
            }
        }
        let before = (self.time / GAZE_PERIOD + 1e-9).floor();
        self.time += dt;
        if (self.time / GAZE_PERIOD + 1e-9).floor() > before {
            self.resample_gaze();
        }
        for (p, off) in self.peds.iter_mut().zip(&self.gaze_offsets) {
            p.gaze_dir = Vec2::from_angle(p.heading + off);
        }
    }

    fn resample_gaze(&mut self) {
        for off in &mut self.gaze_offsets {
            *off = if self.rng.bernoulli(GAZE_ALONG_HEADING) { 0.0 } else { self.rng.range(-FRAC_PI_2, FRAC_PI_2) };
        }
    }

    fn social_force_step(&mut self, dt: f64, robot_visible: bool) {
        let map = &self.layout.map;
        let n = self.peds.len();
        let mut acc = Vec::with_capacity(n);
        for i in 0..n {
            let p = &self.peds[i];
            let (lane, goal) = self.lanes[i];
            let target = self.layout.lanes[lane].target(p.pos, goal);
            let v_des = (target - p.pos).normalized().map_or(Vec2::ZERO, |d| d * p.pref_speed);
            let facing = v_des.normalized().or_else(|| p.vel.normalized()).unwrap_or(Vec2::from_angle(p.heading));
            let mut a = (v_des - p.vel) / GOAL_RELAX;
            for (j, q) in self.peds.iter().enumerate() {
                if j != i {
                    a += repulsion(p.pos, q.pos, p.radius + q.radius, facing, PED_REPULSION, PED_RANGE, true);
                }
            }
            a += wall_force(map, p.pos, p.radius);
            if robot_visible && awareness_check(p, self.robot.pos) {
                a += robot_repulsion(p, &self.robot, facing);
            }
            let mag = a.norm();
            if mag > MAX_ACCEL {
                a = a * (MAX_ACCEL / mag);
            }
            acc.push((a, target));
        }
        for (i, (a, target)) in acc.into_iter().enumerate() {
            let p = &mut self.peds[i];
            let mut v = p.vel + a * dt;
            let s = v.norm();
            if s > MAX_PED_SPEED {
                v = v * (MAX_PED_SPEED / s);
            }
            let mut pos = p.pos + v * dt;
            if map.clearance(pos) < 0.05 {
                pos = map.project_free(pos, 0.05);
                v = (pos - p.pos) / dt;
            }
            p.pos = pos;
            p.vel = v;
            p.goal = target;
            if v.norm() > 0.05 {
                p.heading = v.angle();
            }
        }
        if self.layout.config.recycle {
            self.recycle(robot_visible);
        }
    }

    fn recycle(&mut self, robot_visible: bool) {
        for i in 0..self.peds.len() {
            let (li, goal) = self.lanes[i];
            let lane = &self.layout.lanes[li];
            let exit_mid = (lane.exit.0 + lane.exit.1) * 0.5;
            let arrived =
                self.peds[i].pos.distance(goal) < 0.5 || (self.peds[i].pos - exit_mid).dot(lane.travel_dir()) > -0.2;
            if !arrived {
                continue;
            }
            for _ in 0..10 {
                let p = random_on(lane.entry, &mut self.rng);
                let crowded = self.peds.iter().enumerate().any(|(j, q)| j != i && q.pos.distance(p) < 0.6);
                let near_robot = robot_visible && p.distance(self.robot.pos) < 2.0;
                if crowded || near_robot {
                    continue;
                }
                let g = random_on(lane.exit, &mut self.rng);
                let target = lane.target(p, g);
                let ped = &mut self.peds[i];
                let fresh = Pedestrian::new(ped.id, p, target, ped.pref_speed);
                ped.pos = fresh.pos;
                ped.vel = fresh.vel;
                ped.goal = fresh.goal;
                ped.heading = fresh.heading;
                self.lanes[i].1 = g;
                break;
            }
        }
    }
}

/// Repulsion from the robot, evaluated where the two would be closest if
/// both kept their velocities for up to `ANTICIPATION` seconds.
fn robot_repulsion(p: &Pedestrian, robot: &RobotState, facing: Vec2) -> Vec2 {
    let contact = p.radius + ROBOT_RADIUS;
    let d = p.pos - robot.pos;
    let rv = p.vel - robot.velocity();
    let tau = if rv.norm_sq() > 1e-12 { (-d.dot(rv) / rv.norm_sq()).clamp(0.0, ANTICIPATION) } else { 0.0 };
    let mut ahead = d + rv * tau;
    if ahead.norm() < 1e-9 {
        // dead-on course: treat the robot as slightly to the left
        ahead = Vec2::new(facing.y, -facing.x) * 1e-6;
    }
    let mut f = repulsion(robot.pos + ahead, robot.pos, contact, facing, ROBOT_REPULSION, ROBOT_RANGE, true);
    let dist = d.norm();
    if tau > 0.0 && dist < contact && dist > 0.0 {
        f += d / dist * (BODY_STIFFNESS * (contact - dist));
    }
    f
}

/// Exponential repulsion of a disc at `pos` from one at `other`.
fn repulsion(pos: Vec2, other: Vec2, contact: f64, facing: Vec2, amp: f64, range: f64, pass_right: bool) -> Vec2 {
    let d = pos - other;
    let dist = d.norm();
    if dist >= INTERACTION_CUTOFF || dist == 0.0 {
        return Vec2::ZERO;
    }
    let n = d / dist;
    let ahead = -n.dot(facing);
    let weight = ANISOTROPY + (1.0 - ANISOTROPY) * 0.5 * (1.0 + ahead);
    let mut mag = amp * ((contact - dist) / range).exp() * weight;
    if dist < contact {
        // bodies in contact push apart regardless of where anyone is facing
        mag += BODY_STIFFNESS * (contact - dist);
    }
    let mut f = n * mag;
    if pass_right && ahead > 0.0 {
        // step away from the side the other agent is on; dead ahead, go right
        let side = if facing.cross(-d) > 1e-9 { 1.0 } else if facing.cross(-d) < -1e-9 { -1.0 } else { 1.0 };
        f += Vec2::new(facing.y, -facing.x) * (side * mag * PASS_RIGHT * ahead);
    }
    f
}

fn wall_force(map: &StaticMap, pos: Vec2, radius: f64) -> Vec2 {
    let b = map.bounds();
    let mut points = vec![
        Vec2::new(b.min.x, pos.y),
        Vec2::new(b.max.x, pos.y),
        Vec2::new(pos.x, b.min.y),
        Vec2::new(pos.x, b.max.y),
    ];
    points.extend(map.obstacles().iter().filter(|o| !o.contains(pos)).map(|o| o.closest_boundary_point(pos)));
    let mut f = Vec2::ZERO;
    for c in points {
        let d = pos - c;
        let dist = d.norm();
        if dist > 0.0 && dist < 2.0 {
            f += d / dist * (OBSTACLE_REPULSION * ((radius - dist) / OBSTACLE_RANGE).exp());
        }
    }
    f
}
