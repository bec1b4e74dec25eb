//! Flow disturbance: how much a robot path from a candidate endpoint to the
//! goal would cut across the predicted crowd flow.

pub mod gp;
pub mod likelihood;
pub mod map_opt;
pub mod search;
pub mod triangulate;

use crate::agent::{Pedestrian, ROBOT_RADIUS};
use crate::error::{Error, Result};
use crate::flowfield::FlowMap;
use crate::geom::Vec2;
use crate::map::StaticMap;

pub use gp::{prior_cost, prior_error, process_cov, transition, GpState};
pub use likelihood::{disc_quadrature, flow_likelihood};
pub use map_opt::{optimize_map, MapParams, MapProblem, MapResult};
pub use search::{astar, edge_flow_costs, flow_astar, Route, SearchGraph, SearchParams};
pub use triangulate::{triangulate, TriangleGraph, TriangulateOptions, VertexKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdpParams {
    pub search: SearchParams,
    pub map: MapParams,
    pub triangulation: TriangulateOptions,
    /// Target spacing of the optimised trajectory states, seconds.
    pub waypoint_dt: f64,
    /// Value reported when the goal cannot be reached.
    pub unreachable: f64,
}

impl Default for FdpParams {
    fn default() -> Self {
        FdpParams {
            search: SearchParams::default(),
            map: MapParams { radius: ROBOT_RADIUS + 0.6, ..MapParams::default() },
            triangulation: TriangulateOptions::default(),
            waypoint_dt: 0.5,
            unreachable: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdpOutcome {
    pub value: f64,
    pub reachable: bool,
    pub converged: bool,
    pub route: Option<Route>,
    pub trajectory: Vec<GpState>,
}

impl FdpOutcome {
    fn unreachable(value: f64) -> Self {
        FdpOutcome { value, reachable: false, converged: true, route: None, trajectory: Vec::new() }
    }
}

/// Triangulation shared by all candidates of one planning cycle.
#[derive(Debug, Clone)]
pub struct FdpContext {
    graph: TriangleGraph,
    goal: Vec2,
    params: FdpParams,
}

impl FdpContext {
    /// Triangulates the scene with the robot position and goal as anchors.
    pub fn new(robot: Vec2, goal: Vec2, peds: &[Pedestrian], map: &StaticMap, params: FdpParams) -> Result<Self> {
        let graph = triangulate(peds, map, &[robot, goal], &params.triangulation)?;
        Ok(FdpContext { graph, goal, params })
    }

    pub fn graph(&self) -> &TriangleGraph {
        &self.graph
    }

    pub fn params(&self) -> &FdpParams {
        &self.params
    }

    /// Disturbance of the route from `start` (reached at `t_start`) to the
    /// goal, over the part of it covered by the flow map.
    pub fn evaluate(&self, start: Vec2, t_start: f64, fm: &FlowMap) -> Result<FdpOutcome> {
        let p = &self.params;
        let route = match flow_astar(&self.graph, start, self.goal, t_start, fm, &p.search) {
            Ok(r) => r,
            Err(Error::Disconnected | Error::BlockedGoal) => return Ok(FdpOutcome::unreachable(p.unreachable)),
            Err(e) => return Err(e),
        };
        let end_t = route.times.last().copied().unwrap_or(t_start).min(fm.end_time());
        let span = end_t - t_start;
        if span <= 1e-9 {
            return Ok(FdpOutcome { value: 0.0, reachable: true, converged: true, route: Some(route), trajectory: Vec::new() });
        }
        let segments = (span / p.waypoint_dt).round().max(1.0) as usize;
        let dt = span / segments as f64;
        let pos: Vec<Vec2> = (0..=segments).map(|i| route.position_at(t_start + i as f64 * dt)).collect();
        let init: Vec<GpState> = (0..=segments)
            .map(|i| {
                let (a, b) = (pos[i.saturating_sub(1)], pos[(i + 1).min(segments)]);
                let steps = ((i + 1).min(segments) - i.saturating_sub(1)) as f64;
                GpState::new(pos[i], (b - a) / (steps * dt))
            })
            .collect();
        let res = optimize_map(&init, t_start, dt, fm, &p.map)?;
        Ok(FdpOutcome {
            value: res.disturbance,
            reachable: true,
            converged: res.converged,
            route: Some(route),
            trajectory: res.states,
        })
    }
}

/// Flow disturbance of a candidate ending at `endpoint` at time `t_end`.
pub fn fdp(
    endpoint: Vec2,
    t_end: f64,
    goal: Vec2,
    peds: &[Pedestrian],
    map: &StaticMap,
    fm: &FlowMap,
    params: &FdpParams,
) -> Result<FdpOutcome> {
    FdpContext::new(endpoint, goal, peds, map, *params)?.evaluate(endpoint, t_end, fm)
}
