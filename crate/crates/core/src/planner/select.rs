//! Candidates, temporal consistency and cost-based selection.

use std::collections::VecDeque;

use super::config::PlannerConfig;
use super::primitive::MotionPrimitive;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: usize,
    /// Face of the robot's triangle fan the candidate was sampled for.
    pub face: Option<usize>,
    pub primitive: MotionPrimitive,
    pub idp: f64,
    pub fdp: f64,
    pub base_cost: f64,
    pub total: f64,
    pub consistency_age: usize,
    pub safe: bool,
    pub converged: bool,
    pub carried_over: bool,
    /// Survived the check against the predicted pedestrian reactions.
    pub post_ok: bool,
    /// Safe prefix followed by the verified braking manoeuvre.
    pub contingency: Option<MotionPrimitive>,
}

impl Candidate {
    pub fn new(id: usize, face: Option<usize>, primitive: MotionPrimitive) -> Self {
        Candidate {
            id,
            face,
            primitive,
            idp: 0.0,
            fdp: 0.0,
            base_cost: 0.0,
            total: f64::INFINITY,
            consistency_age: 0,
            safe: false,
            converged: true,
            carried_over: false,
            post_ok: true,
            contingency: None,
        }
    }

    /// Multiplier on the disturbance terms: `decay^age` for carried-over
    /// candidates, one otherwise.
    pub fn discount(&self, cfg: &PlannerConfig) -> f64 {
        if self.carried_over {
            cfg.decay_rate.powi(self.consistency_age as i32)
        } else {
            1.0
        }
    }

    pub fn eligible(&self) -> bool {
        self.safe && self.post_ok && self.total.is_finite()
    }
}

/// Appends the previous decision (already trimmed and re-timed) with its age
/// incremented, unless its decayed weight fell below the carry threshold.
pub fn consistency_merge(prev_best: Option<Candidate>, mut fresh: Vec<Candidate>, cfg: &PlannerConfig) -> Vec<Candidate> {
    if let Some(mut prev) = prev_best {
        let age = prev.consistency_age + 1;
        if cfg.decay_rate.powi(age as i32) >= cfg.carry_threshold {
            prev.consistency_age = age;
            prev.carried_over = true;
            prev.id = fresh.len();
            fresh.push(prev);
        }
    }
    fresh
}

/// Running median of the positive values seen, over a bounded window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunningMedian {
    order: VecDeque<f64>,
    sorted: Vec<f64>,
}

/// Values retained by [`RunningMedian`].
pub const MEDIAN_WINDOW: usize = 4096;

impl RunningMedian {
    pub fn push(&mut self, v: f64) {
        if !(v > 0.0) || !v.is_finite() {
            return;
        }
        if self.order.len() == MEDIAN_WINDOW {
            let old = self.order.pop_front().unwrap();
            let i = self.sorted.partition_point(|x| *x < old);
            self.sorted.remove(i);
        }
        self.order.push_back(v);
        let i = self.sorted.partition_point(|x| *x < v);
        self.sorted.insert(i, v);
    }

    pub fn median(&self) -> Option<f64> {
        let n = self.sorted.len();
        match n {
            0 => None,
            _ if n % 2 == 1 => Some(self.sorted[n / 2]),
            _ => Some(0.5 * (self.sorted[n / 2 - 1] + self.sorted[n / 2])),
        }
    }

    /// Median, or one before any positive value was seen.
    pub fn scale(&self) -> f64 {
        self.median().unwrap_or(1.0).max(1e-6)
    }
}

/// Total cost `w_base * base + discount * (w_idp * idp / s_idp + w_fdp * fdp / s_fdp)`.
pub fn total_cost(c: &Candidate, cfg: &PlannerConfig, idp_scale: f64, fdp_scale: f64) -> f64 {
    let disturbance = cfg.w_idp * c.idp / idp_scale + cfg.w_fdp * c.fdp / fdp_scale;
    cfg.w_base * c.base_cost + c.discount(cfg) * disturbance
}

/// Fills in totals and returns the index of the cheapest eligible candidate
/// (lowest id on ties).
pub fn score_and_select(cands: &mut [Candidate], cfg: &PlannerConfig, idp_scale: f64, fdp_scale: f64) -> Option<usize> {
    for c in cands.iter_mut() {
        c.total = if c.safe { total_cost(c, cfg, idp_scale, fdp_scale) } else { f64::INFINITY };
    }
    cands
        .iter()
        .enumerate()
        .filter(|(_, c)| c.eligible())
        .min_by(|a, b| a.1.total.total_cmp(&b.1.total).then(a.1.id.cmp(&b.1.id)))
        .map(|(i, _)| i)
}
