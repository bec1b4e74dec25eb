//! Trajectory overlap penalties and their Monte-Carlo expectations.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::map::StaticMap;
use crate::traj::{min_separation, Trajectory};

use super::bundle::WeightedBundle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyParams {
    pub c_ped: f64,
    pub c_obs: f64,
    /// Distance decay rate in 1/m.
    pub b: f64,
    /// Per-step time discount.
    pub gamma: f64,
    pub th_peer: f64,
    pub th_robot: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        PenaltyParams { c_ped: 1.0, c_obs: 10.0, b: 2.0, gamma: 0.9, th_peer: 0.6, th_robot: 0.8 }
    }
}

impl PenaltyParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c_ped, self.c_obs, self.b, self.gamma, self.th_peer, self.th_robot];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || self.gamma > 1.0 {
            return Err(invalid("penalty parameters must be positive with gamma <= 1"));
        }
        Ok(())
    }
}

/// Whether any waypoint or connecting segment touches an obstacle or
/// leaves the map.
pub fn hits_obstacles(t: &Trajectory, map: &StaticMap) -> bool {
    let pts = t.points();
    pts.iter().any(|p| !map.is_free(*p)) || pts.windows(2).any(|w| map.segment_hits_obstacle(w[0], w[1]))
}

/// The peer term `c_ped * max_t gamma^t * exp(-b (d_t - th_peer))`.
pub fn peer_penalty(ti: &Trajectory, tj: &Trajectory, pp: &PenaltyParams) -> Result<f64> {
    ti.check_time_base(tj)?;
    let n = ti.len().min(tj.len());
    let mut best: f64 = 0.0;
    for t in 0..n {
        let d = ti.point(t).distance(tj.point(t));
        best = best.max(pp.gamma.powi(t as i32) * (-pp.b * (d - pp.th_peer)).exp());
    }
    Ok(pp.c_ped * best)
}

/// Overlap penalty of trajectory `ti` against `tj`, optionally with a robot
/// trajectory that the pedestrian avoids when `aware`.
pub fn overlap_penalty(
    ti: &Trajectory,
    tj: &Trajectory,
    robot: Option<&Trajectory>,
    aware: bool,
    map: &StaticMap,
    pp: &PenaltyParams,
) -> Result<f64> {
    let mut psi = peer_penalty(ti, tj, pp)?;
    let mut ind = 0.0;
    if hits_obstacles(ti, map) {
        ind += 1.0;
    }
    if let Some(r) = robot {
        let (d, _) = min_separation(ti, r)?;
        if aware && d < pp.th_robot {
            ind += 1.0;
        }
    }
    psi += pp.c_obs * ind;
    Ok(psi)
}

/// Monte-Carlo estimate of agent `i`'s expected cost when following its
/// sample `y`, summed over every other agent's current distribution.
pub fn expected_sample_cost(
    i: usize,
    y: usize,
    bundles: &[WeightedBundle],
    robot: Option<&Trajectory>,
    awares: &[bool],
    map: &StaticMap,
    pp: &PenaltyParams,
) -> Result<f64> {
    let ti = &bundles[i].trajectories[y];
    let mut v = 0.0;
    for (j, bj) in bundles.iter().enumerate() {
        if j == i {
            continue;
        }
        let m = bj.len() as f64;
        let mut s = 0.0;
        for (tz, w) in bj.trajectories.iter().zip(&bj.weights) {
            s += overlap_penalty(ti, tz, robot, awares[i], map, pp)? * w;
        }
        v += s / m;
    }
    Ok(v)
}

/// Sum over ordered pairs of agents of the expected pairwise penalty.
pub fn joint_penalty(
    bundles: &[WeightedBundle],
    robot: Option<&Trajectory>,
    awares: &[bool],
    map: &StaticMap,
    pp: &PenaltyParams,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, bi) in bundles.iter().enumerate() {
        for (j, bj) in bundles.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut c = 0.0;
            for (ty, wy) in bi.trajectories.iter().zip(&bi.weights) {
                for (tz, wz) in bj.trajectories.iter().zip(&bj.weights) {
                    c += overlap_penalty(ty, tz, robot, awares[i], map, pp)? * wy * wz;
                }
            }
            total += c / (bi.len() * bj.len()) as f64;
        }
    }
    Ok(total)
}
