//! Candidate generation guided by the triangle faces around the robot.

use crate::agent::{RobotState, ROBOT_RADIUS};
use crate::error::Result;
use crate::fdp::TriangleGraph;
use crate::geom::{wrap_angle, Vec2};
use crate::rng::Rng;

use super::config::PlannerConfig;
use super::cost_to_go::CostToGo;
use super::primitive::{Control, MotionPrimitive};

/// Rejection-sampling attempts per candidate.
pub const MAX_TRIES: usize = 20;

#[derive(Debug, Clone)]
pub struct SampleSet {
    pub primitives: Vec<MotionPrimitive>,
    /// Face (index into `faces`) each primitive was generated for.
    pub face_of: Vec<Option<usize>>,
    /// Triangles incident to the robot vertex.
    pub faces: Vec<usize>,
    /// Faces that received fewer endpoint-valid candidates than allotted.
    pub underfilled: Vec<usize>,
}

/// Angular wedge at the robot spanned by one incident face.
#[derive(Debug, Clone, Copy)]
struct Wedge {
    apex: Vec2,
    from: Vec2,
    to: Vec2,
}

impl Wedge {
    fn new(g: &TriangleGraph, t: usize, robot_vertex: usize) -> Option<Wedge> {
        let tri = g.triangles()[t];
        let k = tri.iter().position(|&v| v == robot_vertex)?;
        let apex = g.vertices()[robot_vertex];
        // triangles are counter-clockwise, so the wedge runs from the next to
        // the previous corner
        let from = g.vertices()[tri[(k + 1) % 3]] - apex;
        let to = g.vertices()[tri[(k + 2) % 3]] - apex;
        Some(Wedge { apex, from, to })
    }

    fn contains(&self, p: Vec2) -> bool {
        let d = p - self.apex;
        d.norm() > 0.1 && self.from.cross(d) >= 0.0 && d.cross(self.to) >= 0.0
    }

    fn span(&self) -> (f64, f64) {
        let a = self.from.angle();
        let mut w = self.to.angle() - a;
        if w < 0.0 {
            w += std::f64::consts::TAU;
        }
        (a, w)
    }
}

/// Constant controls that roughly head for direction `phi`.
fn steer_towards(state: &RobotState, phi: f64, accel: f64, cfg: &PlannerConfig) -> Control {
    let omega = 2.0 * wrap_angle(phi - state.heading) / cfg.horizon;
    Control::new(accel, omega).clamped(cfg.a_max, cfg.omega_max)
}

/// `cfg.k` primitives: the stop primitive, a goal-seeking primitive, then
/// candidates allotted round-robin to the faces around `robot_vertex`, each
/// required to end inside its face's wedge and clear of the map; unfilled slots are topped up
/// with perturbed goal-seeking primitives.
pub fn sample_candidates(
    state: &RobotState,
    graph: Option<(&TriangleGraph, usize)>,
    ctg: &CostToGo,
    cfg: &PlannerConfig,
    rng: &mut Rng,
) -> Result<SampleSet> {
    let mk = |u: Control| MotionPrimitive::constant(*state, u, cfg.horizon, cfg.v_max);
    let mut primitives = vec![MotionPrimitive::stop(*state, cfg.a_max, cfg.horizon, cfg.v_max)?];
    let mut face_of = vec![None];
    let goal_dir = ctg.descent_direction(state.pos, (cfg.v_max * cfg.horizon * 0.5).max(0.5)).angle();
    primitives.push(mk(steer_towards(state, goal_dir, cfg.a_max, cfg))?);
    face_of.push(None);

    let (faces, wedges): (Vec<usize>, Vec<Wedge>) = match graph {
        Some((g, v)) => g.faces_around(v).into_iter().filter_map(|t| Wedge::new(g, t, v).map(|w| (t, w))).unzip(),
        None => (Vec::new(), Vec::new()),
    };
    let slots = cfg.k.saturating_sub(2);
    let mut underfilled = Vec::new();
    if !faces.is_empty() {
        let nf = faces.len();
        for j in 0..nf {
            let quota = slots / nf + usize::from(j < slots % nf);
            let mut got = 0;
            for _ in 0..quota {
                for _ in 0..MAX_TRIES {
                    let (a0, w) = wedges[j].span();
                    let phi = a0 + rng.uniform() * w;
                    let accel = rng.range(-cfg.a_max, cfg.a_max);
                    let p = mk(steer_towards(state, phi, accel, cfg))?;
                    if wedges[j].contains(p.end_state.pos) && ctg.map().clearance(p.end_state.pos) >= ROBOT_RADIUS {
                        primitives.push(p);
                        face_of.push(Some(j));
                        got += 1;
                        break;
                    }
                }
            }
            if got < quota {
                underfilled.push(j);
            }
        }
    }
    while primitives.len() < cfg.k {
        let phi = goal_dir + rng.normal() * 0.6;
        let accel = rng.range(-cfg.a_max, cfg.a_max);
        primitives.push(mk(steer_towards(state, phi, accel, cfg))?);
        face_of.push(None);
    }
    Ok(SampleSet { primitives, face_of, faces, underfilled })
}
