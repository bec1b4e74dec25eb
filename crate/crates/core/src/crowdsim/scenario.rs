//! Scenario geometry and initial crowd placement.

use std::sync::Arc;

use crate::agent::{Pedestrian, RobotState, PED_RADIUS, ROBOT_RADIUS};
use crate::error::{Error, Result};
use crate::geom::{ConvexPolygon, Rect, Vec2};
use crate::map::StaticMap;
use crate::rng::Rng;

use super::config::{Direction, ScenarioConfig, ScenarioKind};
use super::world::WorldState;

/// Minimum center distance between pedestrians at spawn.
const SPAWN_SPACING: f64 = 0.6;
/// Pedestrians never spawn closer than this to the robot.
const ROBOT_KEEPOUT: f64 = 3.0;
const SPAWN_TRIES: usize = 1000;

/// A stream of pedestrians: where they enter, where they head, and an
/// optional intermediate point they must pass first.
#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    /// Region used for the initial placement.
    pub region: Rect,
    /// Segment where recycled pedestrians re-enter.
    pub entry: (Vec2, Vec2),
    /// Segment holding the final goals.
    pub exit: (Vec2, Vec2),
    /// Waypoint (e.g. a doorway) and the half-plane test deciding whether it
    /// has been passed: passed when `(pos - via).dot(via_normal) > 0`.
    pub via: Option<(Vec2, Vec2)>,
}

impl Lane {
    pub fn travel_dir(&self) -> Vec2 {
        let a = (self.entry.0 + self.entry.1) * 0.5;
        let b = (self.exit.0 + self.exit.1) * 0.5;
        (b - a).normalized().unwrap_or(Vec2::new(1.0, 0.0))
    }

    /// The target a pedestrian at `pos` should currently walk to.
    pub fn target(&self, pos: Vec2, final_goal: Vec2) -> Vec2 {
        match self.via {
            Some((via, n)) if (pos - via).dot(n) < -0.3 => via,
            _ => final_goal,
        }
    }
}

/// Static description of a scenario shared by every step of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub config: ScenarioConfig,
    pub map: StaticMap,
    pub robot_start: Vec2,
    pub robot_heading: f64,
    pub robot_goal: Vec2,
    pub lanes: Vec<Lane>,
}

impl Layout {
    pub fn build(cfg: &ScenarioConfig) -> Result<Layout> {
        cfg.validate()?;
        match cfg.kind {
            ScenarioKind::NC => Ok(corridor(cfg)),
            ScenarioKind::FI => intersection(cfg),
            ScenarioKind::BA => bottleneck(cfg),
            ScenarioKind::OPEN => Ok(arena(cfg)),
        }
    }

    /// Straight-line distance the robot must cover.
    pub fn course_length(&self) -> f64 {
        match self.config.kind {
            ScenarioKind::BA => {
                let gap = self.lanes[0].via.map_or(self.robot_goal, |v| v.0);
                self.robot_start.distance(gap) + gap.distance(self.robot_goal)
            }
            _ => self.robot_start.distance(self.robot_goal),
        }
    }
}

fn along(x0: f64, x1: f64, y0: f64, y1: f64, forward: bool, via: Option<(Vec2, Vec2)>) -> Lane {
    let (ein, eout) = if forward { (x0, x1) } else { (x1, x0) };
    let via = via.map(|(p, n)| if forward { (p, n) } else { (p, -n) });
    Lane {
        region: Rect::new(Vec2::new(x0, y0), Vec2::new(x1, y1)),
        entry: (Vec2::new(ein, y0), Vec2::new(ein, y1)),
        exit: (Vec2::new(eout, y0), Vec2::new(eout, y1)),
        via,
    }
}

/// Main and minor lanes along the x axis; index 0 is the main flow.
fn axis_lanes(cfg: &ScenarioConfig, x0: f64, x1: f64, y0: f64, y1: f64, via: Option<(Vec2, Vec2)>) -> Vec<Lane> {
    let main_forward = cfg.direction == Direction::DT;
    vec![along(x0, x1, y0, y1, main_forward, via), along(x0, x1, y0, y1, !main_forward, via)]
}

fn corridor(cfg: &ScenarioConfig) -> Layout {
    let (l, w) = (cfg.corridor_length, cfg.corridor_width);
    let margin = PED_RADIUS + 0.15;
    Layout {
        config: cfg.clone(),
        map: StaticMap::open(Rect::new(Vec2::ZERO, Vec2::new(l, w))),
        robot_start: Vec2::new(2.0, w / 2.0),
        robot_heading: 0.0,
        robot_goal: Vec2::new(l - 2.0, w / 2.0),
        lanes: axis_lanes(cfg, 0.4, l - 0.4, margin, w - margin, None),
    }
}

fn intersection(cfg: &ScenarioConfig) -> Result<Layout> {
    let (l, w) = (cfg.corridor_length, cfg.corridor_width);
    let margin = PED_RADIUS + 0.15;
    // the cross corridor is as long as the main one and centered on it
    let (y_lo, y_hi) = (w / 2.0 - l / 2.0, w / 2.0 + l / 2.0);
    let (cx0, cx1) = (l / 2.0 - w / 2.0, l / 2.0 + w / 2.0);
    let bounds = Rect::new(Vec2::new(0.0, y_lo), Vec2::new(l, y_hi));
    let blocks = vec![
        ConvexPolygon::rect(Vec2::new(0.0, y_lo), Vec2::new(cx0, 0.0)),
        ConvexPolygon::rect(Vec2::new(cx1, y_lo), Vec2::new(l, 0.0)),
        ConvexPolygon::rect(Vec2::new(0.0, w), Vec2::new(cx0, y_hi)),
        ConvexPolygon::rect(Vec2::new(cx1, w), Vec2::new(l, y_hi)),
    ];
    let mut lanes = axis_lanes(cfg, 0.4, l - 0.4, margin, w - margin, None);
    let cross = |up: bool| {
        let (a, b) = if up { (y_lo + 0.4, y_hi - 0.4) } else { (y_hi - 0.4, y_lo + 0.4) };
        Lane {
            region: Rect::new(Vec2::new(cx0 + margin, y_lo + 0.4), Vec2::new(cx1 - margin, y_hi - 0.4)),
            entry: (Vec2::new(cx0 + margin, a), Vec2::new(cx1 - margin, a)),
            exit: (Vec2::new(cx0 + margin, b), Vec2::new(cx1 - margin, b)),
            via: None,
        }
    };
    lanes.push(cross(true));
    lanes.push(cross(false));
    Ok(Layout {
        config: cfg.clone(),
        map: StaticMap::new(bounds, blocks, 0.5)?,
        robot_start: Vec2::new(2.0, w / 2.0),
        robot_heading: 0.0,
        robot_goal: Vec2::new(l - 2.0, w / 2.0),
        lanes,
    })
}

fn bottleneck(cfg: &ScenarioConfig) -> Result<Layout> {
    // two square rooms of side `corridor_length / 2` separated by a 0.5 m wall
    let room = cfg.corridor_length / 2.0;
    let h = room.min(cfg.arena_size).max(cfg.bottleneck_gap + 1.0);
    let thick = 0.5;
    let total = 2.0 * room + thick;
    let wx = room;
    let gap = cfg.bottleneck_gap;
    if gap >= h {
        return Err(Error::Config("bottleneck gap must be narrower than the room".into()));
    }
    let bounds = Rect::new(Vec2::ZERO, Vec2::new(total, h));
    let walls = vec![
        ConvexPolygon::rect(Vec2::new(wx, 0.0), Vec2::new(wx + thick, h / 2.0 - gap / 2.0)),
        ConvexPolygon::rect(Vec2::new(wx, h / 2.0 + gap / 2.0), Vec2::new(wx + thick, h)),
    ];
    let margin = PED_RADIUS + 0.15;
    let door = Vec2::new(wx + thick / 2.0, h / 2.0);
    let lanes = axis_lanes(cfg, 0.4, total - 0.4, margin, h - margin, Some((door, Vec2::new(1.0, 0.0))));
    Ok(Layout {
        config: cfg.clone(),
        map: StaticMap::new(bounds, walls, 0.5)?,
        robot_start: Vec2::new(2.0, h / 2.0),
        robot_heading: 0.0,
        robot_goal: Vec2::new(total - 2.0, h / 2.0),
        lanes,
    })
}

fn arena(cfg: &ScenarioConfig) -> Layout {
    let s = cfg.arena_size;
    let margin = PED_RADIUS + 0.15;
    Layout {
        config: cfg.clone(),
        map: StaticMap::open(Rect::new(Vec2::ZERO, Vec2::new(s, s))),
        robot_start: Vec2::new(2.0, s / 2.0),
        robot_heading: 0.0,
        robot_goal: Vec2::new(s - 2.0, s / 2.0),
        lanes: axis_lanes(cfg, 0.4, s - 0.4, margin, s - margin, None),
    }
}

/// Lane assignment for pedestrian `k` of `n`: the first
/// `floor(minor_flow_fraction * n)` pedestrians walk the minor lane when
/// counterflow is on; in intersections every third main-flow pedestrian
/// uses the cross corridor.
fn lane_for(cfg: &ScenarioConfig, k: usize) -> usize {
    let minor = if cfg.counterflow {
        (cfg.minor_flow_fraction * cfg.ped_count as f64 + 1e-9).floor() as usize
    } else {
        0
    };
    if k < minor {
        return 1;
    }
    if cfg.kind == ScenarioKind::FI && (k - minor) % 3 == 2 {
        return if (k / 3) % 2 == 0 { 2 } else { 3 };
    }
    0
}

pub(crate) fn random_on(seg: (Vec2, Vec2), rng: &mut Rng) -> Vec2 {
    seg.0.lerp(seg.1, rng.uniform())
}

/// Builds the initial world for a scenario.
pub fn spawn(cfg: &ScenarioConfig) -> Result<WorldState> {
    let layout = Arc::new(Layout::build(cfg)?);
    let root = Rng::new(cfg.seed);
    let mut place = root.fork(1);
    let mut peds: Vec<Pedestrian> = Vec::with_capacity(cfg.ped_count);
    let mut lanes = Vec::with_capacity(cfg.ped_count);
    for k in 0..cfg.ped_count {
        let li = lane_for(cfg, k);
        let lane = &layout.lanes[li];
        let mut placed = None;
        for _ in 0..SPAWN_TRIES {
            let p = Vec2::new(
                place.range(lane.region.min.x, lane.region.max.x),
                place.range(lane.region.min.y, lane.region.max.y),
            );
            if layout.map.clearance(p) < PED_RADIUS + 0.1
                || p.distance(layout.robot_start) < ROBOT_KEEPOUT + ROBOT_RADIUS
                || peds.iter().any(|q| q.pos.distance(p) < SPAWN_SPACING)
            {
                continue;
            }
            placed = Some(p);
            break;
        }
        let pos = placed.ok_or_else(|| {
            Error::InfeasiblePacking(format!(
                "could not place pedestrian {k} of {} in {}",
                cfg.ped_count,
                cfg.label()
            ))
        })?;
        let goal = random_on(lane.exit, &mut place);
        let speed = (cfg.ped_speed + cfg.ped_speed_spread * place.normal())
            .clamp(0.5 * cfg.ped_speed, 1.5 * cfg.ped_speed)
            .min(super::world::MAX_PED_SPEED);
        let p = Pedestrian::new(k as u32, pos, lane.target(pos, goal), speed);
        peds.push(p);
        lanes.push((li, goal));
    }
    let robot = RobotState::at_rest(layout.robot_start, layout.robot_heading);
    Ok(WorldState::from_parts(layout, peds, lanes, robot, root.fork(2)))
}
