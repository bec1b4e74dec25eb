//! Weighted trajectory samples and their construction.

use serde::{Deserialize, Serialize};

use crate::agent::Pedestrian;
use crate::error::{invalid, Error, Result};
use crate::geom::Vec2;
use crate::rng::Rng;
use crate::traj::Trajectory;

/// `m` sampled trajectories of one agent with nonnegative weights.
///
/// `prior` holds the sampling density of each trajectory up to a common
/// factor; samples drawn from the distribution itself carry equal prior
/// mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedBundle {
    pub agent_id: u32,
    pub trajectories: Vec<Trajectory>,
    pub weights: Vec<f64>,
    pub prior: Vec<f64>,
}

impl WeightedBundle {
    /// Bundle with every weight and prior equal to one.
    pub fn new(agent_id: u32, trajectories: Vec<Trajectory>) -> Result<Self> {
        let m = trajectories.len();
        Self::with_weights(agent_id, trajectories, vec![1.0; m])
    }

    pub fn with_weights(agent_id: u32, trajectories: Vec<Trajectory>, weights: Vec<f64>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(invalid("bundle needs at least one trajectory"));
        }
        if weights.len() != trajectories.len() {
            return Err(Error::LengthMismatch(trajectories.len(), weights.len()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("bundle weights must be finite and nonnegative"));
        }
        let len = trajectories[0].len();
        for t in &trajectories[1..] {
            trajectories[0].check_time_base(t)?;
            if t.len() != len {
                return Err(Error::LengthMismatch(len, t.len()));
            }
        }
        let m = weights.len();
        Ok(WeightedBundle { agent_id, trajectories, weights, prior: vec![1.0; m] })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mean_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len() as f64
    }

    /// Rescales the weights to mean one.
    pub fn normalize(&mut self) -> Result<()> {
        normalize_mean_one(&mut self.weights)
    }

    /// Probability vector proportional to the weights.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        let s: f64 = self.weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NotNormalizable);
        }
        Ok(self.weights.iter().map(|w| w / s).collect())
    }

    /// Index of the most probable trajectory.
    pub fn determinize(&self) -> usize {
        determinize_weights(&self.weights, &self.prior)
    }

    pub fn time_base(&self) -> (f64, f64, usize) {
        let t = &self.trajectories[0];
        (t.t0(), t.dt(), t.len())
    }
}

pub(crate) fn normalize_mean_one(w: &mut [f64]) -> Result<()> {
    let s: f64 = w.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::NotNormalizable);
    }
    let k = w.len() as f64 / s;
    for x in w.iter_mut() {
        *x *= k;
    }
    Ok(())
}

/// Argmax of `w[j] * prior[j]`, lowest index on ties.
pub(crate) fn determinize_weights(w: &[f64], prior: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (j, (a, b)) in w.iter().zip(prior).enumerate() {
        let v = a * b;
        if v > best_v {
            best_v = v;
            best = j;
        }
    }
    best
}

/// Index of the maximum of `w * p0`, ties broken toward the lowest index.
pub fn determinize(b: &WeightedBundle) -> usize {
    b.determinize()
}

/// Spread of the no-interference distribution around the preferred path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NidParams {
    /// Lateral standard deviation growth in m per sqrt(s).
    pub sigma_lat: f64,
    /// Along-track standard deviation growth in m per sqrt(s).
    pub sigma_lon: f64,
    /// Use the noise-free preferred path as sample 0.
    pub include_mean: bool,
}

impl Default for NidParams {
    fn default() -> Self {
        NidParams { sigma_lat: 0.5, sigma_lon: 0.25, include_mean: true }
    }
}

/// The straight preferred path: constant speed toward the goal, stopping
/// there. Points at `t0 + k dt` for `k = 0..len`, measured from the
/// pedestrian's position at `t0 - dt`.
pub fn preferred_path(p: &Pedestrian, t0: f64, dt: f64, len: usize) -> Result<Trajectory> {
    let to_goal = p.goal - p.pos;
    let dist = to_goal.norm();
    let dir = to_goal.normalized().unwrap_or(Vec2::ZERO);
    let pts = (0..len)
        .map(|k| p.pos + dir * (p.pref_speed * (k + 1) as f64 * dt).min(dist))
        .collect();
    Trajectory::new(t0, dt, pts)
}

/// Samples `m` trajectories around the preferred path. Deviations follow a
/// Brownian motion in the path frame, so their covariance grows linearly
/// with lookahead time. All weights are one.
pub fn sample_nid(
    p: &Pedestrian,
    m: usize,
    horizon: f64,
    dt: f64,
    t0: f64,
    params: &NidParams,
    rng: &mut Rng,
) -> Result<WeightedBundle> {
    if m < 2 {
        return Err(invalid(format!("need at least 2 samples, got {m}")));
    }
    if !(horizon > 0.0 && dt > 0.0) {
        return Err(invalid("horizon and dt must be positive"));
    }
    let len = ((horizon / dt) + 1e-9).floor().max(1.0) as usize;
    let mean = preferred_path(p, t0, dt, len)?;
    let along = (p.goal - p.pos).normalized().or_else(|| p.vel.normalized()).unwrap_or(Vec2::new(1.0, 0.0));
    let side = along.perp();
    let sd_lat = params.sigma_lat * dt.sqrt();
    let sd_lon = params.sigma_lon * dt.sqrt();
    let mut trajs = Vec::with_capacity(m);
    for s in 0..m {
        if s == 0 && params.include_mean {
            trajs.push(mean.clone());
            continue;
        }
        let (mut lat, mut lon) = (0.0, 0.0);
        let pts = mean
            .points()
            .iter()
            .map(|&q| {
                lat += sd_lat * rng.normal();
                lon += sd_lon * rng.normal();
                q + side * lat + along * lon
            })
            .collect();
        trajs.push(Trajectory::new(t0, dt, pts)?);
    }
    WeightedBundle::new(p.id, trajs)
}
