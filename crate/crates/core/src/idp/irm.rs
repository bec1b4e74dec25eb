//! Iterative best response over weighted trajectory samples.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::map::StaticMap;
use crate::traj::Trajectory;

use super::bundle::{normalize_mean_one, WeightedBundle};
use super::penalty::{hits_obstacles, PenaltyParams};

/// Outcome of reaction modeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionResult {
    pub bundles: Vec<WeightedBundle>,
    pub iterations: usize,
    pub final_jc: f64,
    /// False when the iteration cap stopped the sweeps before `J_c <= eps`.
    pub converged: bool,
}

/// Reweighted sample weights, one row of `m` per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionWeights {
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub final_jc: f64,
    pub converged: bool,
}

/// Precomputed penalty tables for one set of bundles. The peer terms do not
/// depend on the robot, so one game serves the robot-free run and every
/// robot candidate.
#[derive(Debug, Clone)]
pub struct Game {
    n: usize,
    m: usize,
    /// `peer[((i * n + j) * m + y) * m + z]`
    peer: Vec<f64>,
    /// `c_obs` times the obstacle indicator of sample `(i, y)`.
    obs: Vec<f64>,
    pp: PenaltyParams,
    t0: f64,
    dt: f64,
    len: usize,
}

impl Game {
    pub fn new(bundles: &[WeightedBundle], map: &StaticMap, pp: &PenaltyParams) -> Result<Self> {
        pp.validate()?;
        if bundles.is_empty() {
            return Ok(Game { n: 0, m: 0, peer: vec![], obs: vec![], pp: *pp, t0: 0.0, dt: 1.0, len: 0 });
        }
        let m = bundles[0].len();
        let (t0, dt, len) = bundles[0].time_base();
        for b in bundles {
            if b.len() != m {
                return Err(Error::LengthMismatch(m, b.len()));
            }
            bundles[0].trajectories[0].check_time_base(&b.trajectories[0])?;
            if b.trajectories[0].len() != len {
                return Err(Error::LengthMismatch(len, b.trajectories[0].len()));
            }
        }
        let n = bundles.len();
        // log of the time discount per step, shared by all pairs
        let lg: Vec<f64> = (0..len).map(|t| t as f64 * pp.gamma.ln()).collect();
        let mut peer = vec![0.0; n * n * m * m];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for y in 0..m {
                    let a = bundles[i].trajectories[y].points();
                    for z in 0..m {
                        let b = bundles[j].trajectories[z].points();
                        let mut best = f64::NEG_INFINITY;
                        for t in 0..len {
                            let e = lg[t] - pp.b * (a[t].distance(b[t]) - pp.th_peer);
                            if e > best {
                                best = e;
                            }
                        }
                        peer[((i * n + j) * m + y) * m + z] = pp.c_ped * best.exp();
                    }
                }
            }
        }
        let obs = bundles
            .iter()
            .flat_map(|b| b.trajectories.iter().map(|t| if hits_obstacles(t, map) { pp.c_obs } else { 0.0 }))
            .collect();
        Ok(Game { n, m, peer, obs, pp: *pp, t0, dt, len })
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> usize {
        self.m
    }

    /// `c_obs` times the robot-proximity indicator for every sample, gated
    /// by each agent's awareness. All zeros when no aware sample comes
    /// within `th_robot` of the robot.
    pub fn robot_terms(&self, bundles: &[WeightedBundle], robot: &Trajectory, awares: &[bool]) -> Result<Vec<f64>> {
        if (robot.t0() - self.t0).abs() > 1e-9 || (robot.dt() - self.dt).abs() > 1e-12 {
            return Err(Error::TimeBaseMismatch { t0_a: self.t0, dt_a: self.dt, t0_b: robot.t0(), dt_b: robot.dt() });
        }
        let r = robot.points();
        let len = self.len.min(r.len());
        let th2 = self.pp.th_robot * self.pp.th_robot;
        let mut out = vec![0.0; self.n * self.m];
        for (i, b) in bundles.iter().enumerate() {
            if !awares[i] {
                continue;
            }
            for (y, t) in b.trajectories.iter().enumerate() {
                let p = t.points();
                if (0..len).any(|k| (p[k] - r[k]).norm_sq() < th2) {
                    out[i * self.m + y] = self.pp.c_obs;
                }
            }
        }
        Ok(out)
    }

    /// Expected cost of sample `(i, y)` under the current weights `w`.
    pub fn sample_cost(&self, w: &[f64], rob: &[f64], i: usize, y: usize) -> f64 {
        let (n, m) = (self.n, self.m);
        let fixed = self.obs[i * m + y] + rob[i * m + y];
        let mut v = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let row = &self.peer[((i * n + j) * m + y) * m..][..m];
            let wj = &w[j * m..][..m];
            let mut s = 0.0;
            for z in 0..m {
                s += (row[z] + fixed) * wj[z];
            }
            v += s / m as f64;
        }
        v
    }

    /// Joint expected collision penalty under weights `w`.
    pub fn joint(&self, w: &[f64], rob: &[f64]) -> f64 {
        let (n, m) = (self.n, self.m);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut c = 0.0;
                for y in 0..m {
                    let fixed = self.obs[i * m + y] + rob[i * m + y];
                    let row = &self.peer[((i * n + j) * m + y) * m..][..m];
                    let mut s = 0.0;
                    for z in 0..m {
                        s += (row[z] + fixed) * w[j * m + z];
                    }
                    c += s * w[i * m + y];
                }
                total += c / (m * m) as f64;
            }
        }
        total
    }

    /// Gauss-Seidel reweighting from all-equal weights. `rob` holds the
    /// per-sample robot terms (all zeros for the robot-free game).
    pub fn react(&self, init: &[f64], rob: &[f64], eps: f64, max_iters: usize) -> Result<ReactionWeights> {
        if !(eps > 0.0) {
            return Err(invalid("convergence tolerance must be positive"));
        }
        let (n, m) = (self.n, self.m);
        let mut w = init.to_vec();
        let mut jc = self.joint(&w, rob);
        let mut iterations = 0;
        let mut costs = vec![0.0; m];
        while jc > eps && iterations < max_iters {
            for i in 0..n {
                for (y, c) in costs.iter_mut().enumerate() {
                    *c = self.sample_cost(&w, rob, i, y);
                }
                let wi = &mut w[i * m..][..m];
                for (x, c) in wi.iter_mut().zip(&costs) {
                    *x *= (-c / m as f64).exp();
                }
                normalize_mean_one(wi)?;
            }
            iterations += 1;
            jc = self.joint(&w, rob);
        }
        Ok(ReactionWeights { weights: w, iterations, final_jc: jc, converged: jc <= eps })
    }
}

/// Models how the agents' trajectory distributions shift as they negotiate
/// with each other and, when given, with a robot following `robot`.
/// Without a robot this yields the peer-influence distribution; with one,
/// the total-influence distribution for that robot trajectory.
pub fn individual_reaction_modeling(
    bundles: &[WeightedBundle],
    robot: Option<&Trajectory>,
    awares: &[bool],
    map: &StaticMap,
    pp: &PenaltyParams,
    eps: f64,
    max_iters: usize,
) -> Result<ReactionResult> {
    if awares.len() != bundles.len() {
        return Err(Error::LengthMismatch(bundles.len(), awares.len()));
    }
    let game = Game::new(bundles, map, pp)?;
    let rob = match robot {
        Some(r) if !bundles.is_empty() => game.robot_terms(bundles, r, awares)?,
        _ => vec![0.0; game.n * game.m],
    };
    let init: Vec<f64> = bundles.iter().flat_map(|b| b.weights.iter().copied()).collect();
    let r = game.react(&init, &rob, eps, max_iters)?;
    let mut out = bundles.to_vec();
    for (i, b) in out.iter_mut().enumerate() {
        b.weights.copy_from_slice(&r.weights[i * game.m..][..game.m]);
    }
    Ok(ReactionResult { bundles: out, iterations: r.iterations, final_jc: r.final_jc, converged: r.converged })
}
