//! C interface to the crowdnav simulator and planner.
//!
//! Every function returns a [`CnStatus`]. On failure the message is kept in
//! a thread-local buffer readable with [`cn_last_error`]. Simulations are
//! opaque [`CnSimulation`] handles owned by the caller and released with
//! [`cn_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use crowdnav::crowdsim::{Direction, ScenarioConfig, ScenarioKind};
use crowdnav::harness::{compute_metrics, EpisodeLimits, EpisodeRunner, MetricsRecord, Outcome};
use crowdnav::idp::{wasserstein, WeightedBundle};
use crowdnav::planner::PlannerConfig;
use crowdnav::{Error, Trajectory, Vec2};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Runtime = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnScenarioKind {
    Corridor = 0,
    Intersection = 1,
    Bottleneck = 2,
    Open = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnDirection {
    Downstream = 0,
    Upstream = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnPlanner {
    /// Both disturbance penalties enabled.
    Full = 0,
    /// Progress and safety only.
    Baseline = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnOutcome {
    Running = 0,
    Success = 1,
    Collision = 2,
    Timeout = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CnScenario {
    pub kind: CnScenarioKind,
    pub direction: CnDirection,
    pub ped_count: u32,
    pub seed: u64,
    /// Seconds; zero or negative selects the default limit.
    pub time_limit: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CnRobot {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub time: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CnMetrics {
    pub complete_ratio: f64,
    pub success: bool,
    pub timeout: bool,
    pub collision: bool,
    pub freezing_count: u32,
    pub jerk: f64,
    pub frontal_interactions: u32,
    pub cumulative_density: f64,
    pub execute_time: f64,
}

impl From<&MetricsRecord> for CnMetrics {
    fn from(m: &MetricsRecord) -> Self {
        CnMetrics {
            complete_ratio: m.complete_ratio,
            success: m.success,
            timeout: m.timeout,
            collision: m.collision,
            freezing_count: m.freezing_count,
            jerk: m.jerk,
            frontal_interactions: m.frontal_interactions,
            cumulative_density: m.cumulative_density,
            execute_time: m.execute_time,
        }
    }
}

/// A closed-loop episode in progress.
pub struct CnSimulation {
    runner: EpisodeRunner,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(e: &Error) -> CnStatus {
    match e {
        Error::Config(_) | Error::InfeasiblePacking(_) => CnStatus::Config,
        Error::InvalidParameter(_) | Error::LengthMismatch(..) | Error::TimeBaseMismatch { .. } => CnStatus::InvalidArgument,
        _ => CnStatus::Runtime,
    }
}

fn guard(f: impl FnOnce() -> Result<(), CnStatus>) -> CnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CnStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            CnStatus::Panic
        }
    }
}

fn fail(e: Error) -> CnStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> CnStatus {
    set_error(format!("{what} is null"));
    CnStatus::NullPointer
}

fn configs(s: &CnScenario, planner: CnPlanner) -> (ScenarioConfig, PlannerConfig, EpisodeLimits) {
    let kind = match s.kind {
        CnScenarioKind::Corridor => ScenarioKind::NC,
        CnScenarioKind::Intersection => ScenarioKind::FI,
        CnScenarioKind::Bottleneck => ScenarioKind::BA,
        CnScenarioKind::Open => ScenarioKind::OPEN,
    };
    let dir = match s.direction {
        CnDirection::Downstream => Direction::DT,
        CnDirection::Upstream => Direction::UT,
    };
    let pc = match planner {
        CnPlanner::Full => PlannerConfig::default(),
        CnPlanner::Baseline => PlannerConfig::baseline(),
    };
    let limits = EpisodeLimits { time_limit: (s.time_limit > 0.0).then_some(s.time_limit), ..Default::default() };
    (ScenarioConfig::new(kind, dir, s.ped_count as usize, s.seed), pc, limits)
}

/// Message describing the last failure on this thread, or null if the last
/// call succeeded. Valid until the next call into this library.
#[no_mangle]
pub extern "C" fn cn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Spawns a scenario and writes a new handle to `out`.
///
/// # Safety
/// `scenario` must point to a valid `CnScenario`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_simulation_new(
    scenario: *const CnScenario,
    planner: CnPlanner,
    out: *mut *mut CnSimulation,
) -> CnStatus {
    guard(|| {
        if scenario.is_null() {
            return Err(null("scenario"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let (sc, pc, limits) = configs(&*scenario, planner);
        let runner = EpisodeRunner::new(&sc, &pc, limits).map_err(fail)?;
        *out = Box::into_raw(Box::new(CnSimulation { runner }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from `cn_simulation_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cn_simulation_free(sim: *mut CnSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

fn outcome_code(o: Option<Outcome>) -> CnOutcome {
    match o {
        None => CnOutcome::Running,
        Some(Outcome::Success) => CnOutcome::Success,
        Some(Outcome::Collision) => CnOutcome::Collision,
        Some(Outcome::Timeout) => CnOutcome::Timeout,
    }
}

/// Advances one physics step (0.05 s). `outcome` may be null.
///
/// # Safety
/// `sim` must be a live handle; `outcome` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cn_simulation_step(sim: *mut CnSimulation, outcome: *mut CnOutcome) -> CnStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("sim"))?;
        let o = sim.runner.step().map_err(fail)?;
        if !outcome.is_null() {
            *outcome = outcome_code(o);
        }
        Ok(())
    })
}

/// Steps until the episode ends and writes its metrics. `metrics` may be
/// null.
///
/// # Safety
/// `sim` must be a live handle; `metrics` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cn_simulation_run(sim: *mut CnSimulation, metrics: *mut CnMetrics) -> CnStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("sim"))?;
        sim.runner.run().map_err(fail)?;
        if !metrics.is_null() {
            let m = compute_metrics(&sim.runner.clone().finish()).map_err(fail)?;
            *metrics = CnMetrics::from(&m);
        }
        Ok(())
    })
}

/// Current robot state.
///
/// # Safety
/// `sim` must be a live handle; `robot` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_simulation_robot(sim: *const CnSimulation, robot: *mut CnRobot) -> CnStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        if robot.is_null() {
            return Err(null("robot"));
        }
        let r = sim.runner.robot();
        *robot = CnRobot { x: r.pos.x, y: r.pos.y, heading: r.heading, speed: r.speed, time: sim.runner.world().time };
        Ok(())
    })
}

/// Writes up to `capacity` pedestrian positions as x, y pairs into `xy`
/// (which must hold `2 * capacity` doubles) and the total count to `count`.
/// Pass a null `xy` to query the count only.
///
/// # Safety
/// `sim` must be a live handle; `count` must be writable; `xy` must be null
/// or valid for `2 * capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn cn_simulation_pedestrians(
    sim: *const CnSimulation,
    xy: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> CnStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        if count.is_null() {
            return Err(null("count"));
        }
        let peds = &sim.runner.world().peds;
        *count = peds.len();
        if !xy.is_null() {
            let out = std::slice::from_raw_parts_mut(xy, 2 * capacity);
            for (p, slot) in peds.iter().zip(out.chunks_exact_mut(2)) {
                slot[0] = p.pos.x;
                slot[1] = p.pos.y;
            }
        }
        Ok(())
    })
}

/// Runs a complete episode and writes its metrics.
///
/// # Safety
/// `scenario` must point to a valid `CnScenario`; `metrics` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_episode_run(
    scenario: *const CnScenario,
    planner: CnPlanner,
    metrics: *mut CnMetrics,
) -> CnStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if metrics.is_null() {
            return Err(null("metrics"));
        }
        let (sc, pc, limits) = configs(s, planner);
        let ep = crowdnav::harness::run_episode(&sc, &pc, limits).map_err(fail)?;
        *metrics = CnMetrics::from(&ep.metrics);
        Ok(())
    })
}

unsafe fn bundle(points: *const f64, weights: *const f64, count: usize, len: usize, dt: f64) -> Result<WeightedBundle, Error> {
    let pts = std::slice::from_raw_parts(points, 2 * count * len);
    let trajs = pts
        .chunks_exact(2 * len)
        .map(|c| Trajectory::new(dt, dt, c.chunks_exact(2).map(|p| Vec2::new(p[0], p[1])).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    let w = if weights.is_null() { vec![1.0; count] } else { std::slice::from_raw_parts(weights, count).to_vec() };
    WeightedBundle::with_weights(0, trajs, w)
}

/// Transport distance between two weighted trajectory bundles.
///
/// Each bundle is `count` trajectories of `len` points stored row-major as
/// x, y pairs; weights may be null for uniform weights. Both bundles share
/// the time step `dt`.
///
/// # Safety
/// `a` and `b` must be valid for `2 * count * len` reads, the weight arrays
/// null or valid for `count` reads, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_wasserstein(
    a: *const f64,
    a_weights: *const f64,
    a_count: usize,
    b: *const f64,
    b_weights: *const f64,
    b_count: usize,
    len: usize,
    dt: f64,
    out: *mut f64,
) -> CnStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(null("a, b or out"));
        }
        if a_count == 0 || b_count == 0 || len == 0 {
            set_error("bundles need at least one trajectory of at least one point");
            return Err(CnStatus::InvalidArgument);
        }
        let p = bundle(a, a_weights, a_count, len, dt).map_err(fail)?;
        let q = bundle(b, b_weights, b_count, len, dt).map_err(fail)?;
        *out = wasserstein(&p, &q).map_err(fail)?;
        Ok(())
    })
}
