//! Closed-loop episodes: crowd simulation, planning and tracking.

use crate::agent::RobotState;
use crate::crowdsim::{spawn, Layout, ScenarioConfig, WorldState};
use crate::error::{invalid, Result};
use crate::geom::Vec2;
use crate::planner::{step_unicycle, track, MotionPrimitive, Planner, PlannerConfig};
use crate::rng::Rng;

use super::log::{AgentSample, CycleRecord, EpisodeLog, EpisodeMeta, Frame};
use super::metrics::{classify, compute_metrics, MetricsRecord, Outcome};

/// Stream key separating planner randomness from the crowd's.
const PLANNER_STREAM: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLimits {
    /// Wall-clock limit in simulated seconds; by default three times the
    /// time needed to drive the course at full speed.
    pub time_limit: Option<f64>,
    pub goal_tolerance: f64,
    /// Physics step in seconds.
    pub dt: f64,
    /// Physics steps per planning cycle.
    pub plan_every: usize,
    /// Keep the per-candidate cost tables of every cycle.
    pub record_tables: bool,
}

impl Default for EpisodeLimits {
    fn default() -> Self {
        EpisodeLimits { time_limit: None, goal_tolerance: 0.5, dt: 0.05, plan_every: 2, record_tables: false }
    }
}

impl EpisodeLimits {
    pub fn default_time_limit(layout: &Layout, v_max: f64) -> f64 {
        3.0 * layout.course_length() / v_max
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(invalid("physics step must lie in (0, 0.1] s"));
        }
        if self.plan_every == 0 {
            return Err(invalid("plan_every must be at least 1"));
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(invalid("goal tolerance must be positive"));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(invalid("time limit must be positive"));
            }
        }
        Ok(())
    }
}

fn frame_of(world: &WorldState) -> Frame {
    Frame {
        t: world.time,
        robot: AgentSample { pos: world.robot.pos, vel: world.robot.velocity() },
        peds: world.peds.iter().map(|p| (p.id, AgentSample { pos: p.pos, vel: p.vel })).collect(),
    }
}

/// An episode advanced one physics step at a time.
#[derive(Debug, Clone)]
pub struct EpisodeRunner {
    world: WorldState,
    planner: Planner,
    limits: EpisodeLimits,
    meta: EpisodeMeta,
    frames: Vec<Frame>,
    cycles: Vec<CycleRecord>,
    reference: Option<MotionPrimitive>,
    rng: Rng,
    steps: usize,
    outcome: Option<Outcome>,
}

impl EpisodeRunner {
    pub fn new(scenario: &ScenarioConfig, planner: &PlannerConfig, limits: EpisodeLimits) -> Result<Self> {
        limits.validate()?;
        let world = spawn(scenario)?;
        let planner_state = Planner::new(*planner)?;
        let time_limit =
            limits.time_limit.unwrap_or_else(|| EpisodeLimits::default_time_limit(world.layout(), planner.v_max));
        let meta = EpisodeMeta {
            scenario: scenario.clone(),
            planner: *planner,
            seed: scenario.seed,
            map: world.map().clone(),
            goal: world.robot_goal(),
            robot_heading: world.robot.heading,
            dt: limits.dt,
            time_limit,
            goal_tolerance: limits.goal_tolerance,
        };
        let first = frame_of(&world);
        let outcome = classify(&meta, &first);
        Ok(EpisodeRunner {
            rng: Rng::new(scenario.seed).fork(PLANNER_STREAM),
            world,
            planner: planner_state,
            limits,
            meta,
            frames: vec![first],
            cycles: Vec::new(),
            reference: None,
            steps: 0,
            outcome,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn robot(&self) -> &RobotState {
        &self.world.robot
    }

    pub fn goal(&self) -> Vec2 {
        self.meta.goal
    }

    pub fn meta(&self) -> &EpisodeMeta {
        &self.meta
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// The primitive currently being tracked.
    pub fn reference(&self) -> Option<&MotionPrimitive> {
        self.reference.as_ref()
    }

    /// Advances one physics step, replanning on the planning cadence.
    /// Returns the outcome once the episode has ended; further calls are
    /// no-ops.
    pub fn step(&mut self) -> Result<Option<Outcome>> {
        if self.outcome.is_some() {
            return Ok(self.outcome);
        }
        let cfg = *self.planner.config();
        let dt = self.limits.dt;
        if self.steps % self.limits.plan_every == 0 {
            let cycle = (self.steps / self.limits.plan_every) as u64;
            let out = self.planner.plan_step(&self.world, self.meta.goal, &self.rng.fork(cycle))?;
            let table = if self.limits.record_tables {
                out.table
                    .iter()
                    .map(|r| {
                        let mut b = Vec::new();
                        r.write_csv(&mut b).expect("writing to memory");
                        String::from_utf8(b).expect("ascii row").trim_end().to_string()
                    })
                    .collect()
            } else {
                Vec::new()
            };
            self.cycles.push(CycleRecord {
                t: self.world.time,
                chosen: out.table.iter().find(|r| r.chosen).map(|r| r.id),
                freeze: out.freeze,
                candidates: out.table.len(),
                safe: out.table.iter().filter(|r| r.safe).count(),
                table,
                path: out.chosen.primitive.trajectory.points().to_vec(),
            });
            self.reference = Some(out.chosen.primitive);
        }
        let robot = RobotState { time: self.world.time, ..self.world.robot };
        let u = track(self.reference.as_ref().expect("planned on the first step"), &robot, dt, &cfg);
        let next = step_unicycle(&robot, u, dt, cfg.v_max);
        // pedestrians react to where the robot was at the start of the step
        self.world.step_mut(dt, self.meta.scenario.robot_visible);
        self.world.robot = RobotState { time: self.world.time, ..next };
        self.steps += 1;
        let f = frame_of(&self.world);
        self.outcome = classify(&self.meta, &f);
        self.frames.push(f);
        Ok(self.outcome)
    }

    /// Steps until the episode ends.
    pub fn run(&mut self) -> Result<Outcome> {
        loop {
            if let Some(o) = self.step()? {
                return Ok(o);
            }
        }
    }

    pub fn finish(self) -> EpisodeLog {
        EpisodeLog { meta: self.meta, frames: self.frames, cycles: self.cycles }
    }
}

/// A finished episode and its metrics.
#[derive(Debug, Clone)]
pub struct Episode {
    pub log: EpisodeLog,
    pub metrics: MetricsRecord,
}

pub fn run_episode(scenario: &ScenarioConfig, planner: &PlannerConfig, limits: EpisodeLimits) -> Result<Episode> {
    let mut runner = EpisodeRunner::new(scenario, planner, limits)?;
    runner.run()?;
    let log = runner.finish();
    let metrics = compute_metrics(&log)?;
    Ok(Episode { log, metrics })
}
