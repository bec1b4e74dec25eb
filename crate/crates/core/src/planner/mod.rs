//! Sampling-based local planner: face-guided motion primitives, passive
//! safety, temporal consistency and disturbance-aware selection.

pub mod config;
pub mod cost_to_go;
pub mod primitive;
pub mod safety;
pub mod sample;
pub mod select;
pub mod track;

use std::io::Write;

use rayon::prelude::*;

use crate::agent::{Pedestrian, RobotState};
use crate::crowdsim::{awareness_check, WorldState};
use crate::error::Result;
use crate::fdp::{triangulate, FdpContext, FdpParams, SearchParams, TriangulateOptions};
use crate::flowfield::{build_flowmap, FlowMap, FlowParams};
use crate::geom::Vec2;
use crate::idp::{IdpContext, IdpParams};
use crate::map::StaticMap;
use crate::rng::Rng;

pub use config::PlannerConfig;
pub use cost_to_go::CostToGo;
pub use primitive::{brake, step_unicycle, Control, MotionPrimitive, SUBSTEP, SUBSTEPS_PER_SAMPLE};
pub use safety::{certify, passive_safety_check, post_collision_check, safety_clearance, sweep_collides};
pub use sample::{sample_candidates, SampleSet};
pub use select::{consistency_merge, score_and_select, total_cost, Candidate, RunningMedian};
pub use track::track;

/// One row of the per-cycle debug table.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub id: usize,
    pub face: Option<usize>,
    pub idp: f64,
    pub fdp: f64,
    pub base: f64,
    pub total: f64,
    pub safe: bool,
    pub converged: bool,
    pub carried_over: bool,
    pub post_ok: bool,
    pub chosen: bool,
}

impl CostRow {
    pub const HEADER: &'static str = "id,face,idp,fdp,base,total,safe,converged,carried_over,post_ok,chosen";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let face = self.face.map(|f| f.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.id,
            face,
            self.idp,
            self.fdp,
            self.base,
            self.total,
            self.safe as u8,
            self.converged as u8,
            self.carried_over as u8,
            self.post_ok as u8,
            self.chosen as u8
        )
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutput {
    pub chosen: Candidate,
    pub table: Vec<CostRow>,
    /// No candidate was eligible; the robot is braking.
    pub freeze: bool,
    pub underfilled: Vec<usize>,
}

/// Planner state carried between cycles of one episode.
#[derive(Debug, Clone)]
pub struct Planner {
    cfg: PlannerConfig,
    ctg: Option<CostToGo>,
    idp_scale: RunningMedian,
    fdp_scale: RunningMedian,
    prev_best: Option<Candidate>,
    contingency: Option<MotionPrimitive>,
}

fn base_cost(p: &MotionPrimitive, ctg: &CostToGo, cfg: &PlannerConfig) -> f64 {
    // seconds lost against driving straight down the cost-to-go at v_max
    let ideal = (ctg.value(p.start().pos) - cfg.v_max * p.duration()).max(0.0);
    (ctg.value(p.end_state.pos) - ideal).max(0.0) / cfg.v_max
}

impl Planner {
    pub fn new(cfg: PlannerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Planner {
            cfg,
            ctg: None,
            idp_scale: RunningMedian::default(),
            fdp_scale: RunningMedian::default(),
            prev_best: None,
            contingency: None,
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    fn cost_to_go(&mut self, map: &StaticMap, goal: Vec2) -> Result<&CostToGo> {
        if self.ctg.as_ref().map(|c| c.goal()) != Some(goal) {
            self.ctg = Some(CostToGo::new(map, goal, self.cfg.cost_to_go_resolution)?);
        }
        Ok(self.ctg.as_ref().unwrap())
    }

    fn idp_params(&self) -> IdpParams {
        IdpParams { m: self.cfg.idp_samples, eps: self.cfg.idp_eps, max_iters: self.cfg.idp_max_iters, ..IdpParams::default() }
    }

    fn fdp_params(&self) -> FdpParams {
        FdpParams { search: SearchParams { speed: self.cfg.v_max, ..SearchParams::default() }, ..FdpParams::default() }
    }

    /// One planning cycle for the robot in `world`, heading for `goal`.
    /// `rng` should be dedicated to this cycle; the result is a pure function
    /// of the planner state, the world and `rng`.
    pub fn plan_step(&mut self, world: &WorldState, goal: Vec2, rng: &Rng) -> Result<PlanOutput> {
        let cfg = self.cfg;
        let state = RobotState { time: world.time, ..world.robot };
        let map = world.map().clone();
        let ctg = self.cost_to_go(&map, goal)?.clone();
        let peds = &world.peds;

        let graph = triangulate(peds, &map, &[state.pos, goal], &TriangulateOptions::default()).ok();
        let fan = graph.as_ref().and_then(|g| g.anchor_vertex(0).map(|v| (g, v)));
        let mut sample_rng = rng.fork(1);
        let samples = sample_candidates(&state, fan, &ctg, &cfg, &mut sample_rng)?;
        let mut fresh: Vec<Candidate> = samples
            .primitives
            .iter()
            .zip(&samples.face_of)
            .enumerate()
            .map(|(i, (p, f))| Candidate::new(i, *f, p.clone()))
            .collect();
        for c in &mut fresh {
            c.base_cost = base_cost(&c.primitive, &ctg, &cfg);
        }
        let prev = match self.prev_best.take() {
            Some(mut p) => {
                let elapsed = state.time - p.primitive.start().time;
                p.primitive = p.primitive.shifted(state, elapsed, cfg.v_max)?;
                p.base_cost = base_cost(&p.primitive, &ctg, &cfg);
                Some(p)
            }
            None => None,
        };
        let mut cands = consistency_merge(prev, fresh, &cfg);

        let certs: Vec<Option<MotionPrimitive>> = cands
            .par_iter()
            .map(|c| certify(&c.primitive, peds, &map, &cfg))
            .collect::<Result<_>>()?;
        for (c, cert) in cands.iter_mut().zip(certs) {
            c.safe = cert.is_some();
            c.contingency = cert;
            c.idp = 0.0;
            c.fdp = 0.0;
            c.post_ok = true;
            c.converged = true;
        }

        self.disturbances(&mut cands, world, &state, goal, &map, rng)?;
        for c in cands.iter().filter(|c| c.safe) {
            self.idp_scale.push(c.idp);
            self.fdp_scale.push(c.fdp);
        }
        let pick = score_and_select(&mut cands, &cfg, self.idp_scale.scale(), self.fdp_scale.scale());

        let (chosen, freeze) = match pick {
            Some(i) => {
                let mut c = cands[i].clone();
                if !c.carried_over {
                    c.consistency_age = 0;
                }
                self.contingency = c.contingency.clone();
                self.prev_best = Some(c.clone());
                (c, false)
            }
            None => {
                self.prev_best = None;
                (self.fallback(&state, peds, &map)?, true)
            }
        };
        let table = cands
            .iter()
            .map(|c| CostRow {
                id: c.id,
                face: c.face,
                idp: c.idp,
                fdp: c.fdp,
                base: c.base_cost,
                total: c.total,
                safe: c.safe,
                converged: c.converged,
                carried_over: c.carried_over,
                post_ok: c.post_ok,
                chosen: !freeze && pick == Some(c.id),
            })
            .collect();
        Ok(PlanOutput { chosen, table, freeze, underfilled: samples.underfilled })
    }

    /// Fills in IDP, FDP and the post-hoc reaction check for safe candidates.
    fn disturbances(
        &self,
        cands: &mut [Candidate],
        world: &WorldState,
        state: &RobotState,
        goal: Vec2,
        map: &StaticMap,
        rng: &Rng,
    ) -> Result<()> {
        let cfg = &self.cfg;
        let dt = SUBSTEP * SUBSTEPS_PER_SAMPLE as f64;
        let reach = cfg.v_max * cfg.horizon + cfg.game_radius;
        let game: Vec<Pedestrian> = world.peds.iter().filter(|p| p.pos.distance(state.pos) <= reach).cloned().collect();
        let idp_ctx = if cfg.uses_idp() && !game.is_empty() {
            let awares: Vec<bool> = game.iter().map(|p| awareness_check(p, state.pos)).collect();
            let len = cands[0].primitive.trajectory.len();
            Some(IdpContext::new(&game, &awares, map, state.time + dt, dt, len, &self.idp_params(), &rng.fork(2))?)
        } else {
            None
        };
        let flow: Option<(FlowMap, FdpContext)> = if cfg.uses_fdp() {
            let fm = build_flowmap(&world.peds, map, cfg.flow_horizon, state.time, FlowParams::default())?;
            FdpContext::new(state.pos, goal, &world.peds, map, self.fdp_params()).ok().map(|ctx| (fm, ctx))
        } else {
            None
        };
        let results: Vec<(f64, f64, bool, bool)> = cands
            .par_iter()
            .map(|c| {
                if !c.safe {
                    return Ok((0.0, 0.0, true, true));
                }
                let (mut idp, mut post_ok, mut converged) = (0.0, true, true);
                if let Some(ctx) = &idp_ctx {
                    let out = ctx.evaluate(&c.primitive.trajectory)?;
                    idp = out.value;
                    converged &= out.converged;
                    let tid: Vec<_> = out.tid_choice.iter().enumerate().map(|(i, &k)| ctx.trajectory(i, k)).collect();
                    post_ok = post_collision_check(&c.primitive.trajectory, &tid);
                }
                let mut fdp = 0.0;
                if let Some((fm, ctx)) = &flow {
                    let out = ctx.evaluate(c.primitive.end_state.pos, c.primitive.end_state.time, fm)?;
                    fdp = out.value;
                    converged &= out.converged;
                }
                Ok((idp, fdp, post_ok, converged))
            })
            .collect::<Result<_>>()?;
        for (c, (idp, fdp, post_ok, converged)) in cands.iter_mut().zip(results) {
            c.idp = idp;
            c.fdp = fdp;
            c.post_ok = post_ok;
            c.converged = converged;
        }
        Ok(())
    }

    /// Remainder of the last verified braking manoeuvre when it is still
    /// clear, otherwise straight full braking.
    fn fallback(&self, state: &RobotState, peds: &[Pedestrian], map: &StaticMap) -> Result<Candidate> {
        let cfg = &self.cfg;
        if let Some(cont) = &self.contingency {
            let elapsed = state.time - cont.start().time;
            let rest = cont.shifted(*state, elapsed, cfg.v_max)?;
            let clearance = crate::agent::ROBOT_RADIUS + crate::agent::PED_RADIUS;
            let stop_at = rest.states.iter().position(|s| s.speed == 0.0).unwrap_or(rest.states.len() - 1);
            if !sweep_collides(&rest.states[..=stop_at], peds, state.time, clearance, map) {
                let mut c = Candidate::new(usize::MAX, None, rest);
                c.safe = true;
                return Ok(c);
            }
        }
        let stop = MotionPrimitive::stop(*state, cfg.a_max, cfg.horizon, cfg.v_max)?;
        let mut c = Candidate::new(usize::MAX, None, stop);
        c.safe = passive_safety_check(&c.primitive, peds, map, cfg);
        Ok(c)
    }
}

/// Single planning cycle with a fresh planner.
pub fn plan_step(world: &WorldState, goal: Vec2, cfg: &PlannerConfig, rng: &Rng) -> Result<PlanOutput> {
    Planner::new(*cfg)?.plan_step(world, goal, rng)
}
