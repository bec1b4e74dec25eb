//! Individual disturbance: how far a robot trajectory pushes each
//! pedestrian's most likely future away from where the crowd alone would
//! have taken them.
//!
//! Each pedestrian's no-interference distribution is sampled once. Weights
//! are then reshaped by iterative best response, first among pedestrians
//! only (peer influence) and then with a robot trajectory as a dynamic
//! obstacle (total influence). The penalty is the largest per-pedestrian
//! distance between the two determinized distributions.

mod bundle;
mod irm;
mod penalty;
mod transport;

pub use bundle::{determinize, preferred_path, sample_nid, NidParams, WeightedBundle};
pub use irm::{individual_reaction_modeling, Game, ReactionResult, ReactionWeights};
pub use penalty::{expected_sample_cost, hits_obstacles, joint_penalty, overlap_penalty, peer_penalty, PenaltyParams};
pub use transport::{transport, wasserstein};

use serde::{Deserialize, Serialize};

use crate::agent::Pedestrian;
use crate::error::{Error, Result};
use crate::map::StaticMap;
use crate::rng::Rng;
use crate::traj::{traj_metric_unchecked, Trajectory};

use bundle::determinize_weights;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdpParams {
    /// Samples per pedestrian.
    pub m: usize,
    pub penalty: PenaltyParams,
    pub eps: f64,
    pub max_iters: usize,
    pub nid: NidParams,
}

impl Default for IdpParams {
    fn default() -> Self {
        IdpParams { m: 16, penalty: PenaltyParams::default(), eps: 0.05, max_iters: 10, nid: NidParams::default() }
    }
}

/// Result of scoring one robot trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct IdpOutcome {
    /// Maximum shift over pedestrians, in meters.
    pub value: f64,
    /// Shift of each pedestrian.
    pub per_ped: Vec<f64>,
    /// Index of each pedestrian's most likely trajectory with the robot.
    pub tid_choice: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

/// Per-cycle state: sampled bundles, penalty tables and the robot-free
/// reaction, reused for every robot candidate.
#[derive(Debug, Clone)]
pub struct IdpContext {
    bundles: Vec<WeightedBundle>,
    awares: Vec<bool>,
    game: Game,
    pid: ReactionWeights,
    pid_choice: Vec<usize>,
    params: IdpParams,
}

impl IdpContext {
    /// Samples every pedestrian on the time base `t0 + k dt`, `k < len`,
    /// and solves the robot-free game. Pedestrian `k` draws from
    /// `rng.fork(id)`, so results do not depend on pedestrian order.
    pub fn new(
        peds: &[Pedestrian],
        awares: &[bool],
        map: &StaticMap,
        t0: f64,
        dt: f64,
        len: usize,
        params: &IdpParams,
        rng: &Rng,
    ) -> Result<Self> {
        if awares.len() != peds.len() {
            return Err(Error::LengthMismatch(peds.len(), awares.len()));
        }
        let horizon = len as f64 * dt;
        let bundles = peds
            .iter()
            .map(|p| sample_nid(p, params.m, horizon, dt, t0, &params.nid, &mut rng.fork(p.id as u64)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_bundles(bundles, awares.to_vec(), map, params)
    }

    pub fn from_bundles(bundles: Vec<WeightedBundle>, awares: Vec<bool>, map: &StaticMap, params: &IdpParams) -> Result<Self> {
        if awares.len() != bundles.len() {
            return Err(Error::LengthMismatch(bundles.len(), awares.len()));
        }
        let game = Game::new(&bundles, map, &params.penalty)?;
        let init = vec![1.0; game.agents() * game.samples()];
        let zeros = vec![0.0; init.len()];
        let pid = game.react(&init, &zeros, params.eps, params.max_iters)?;
        let pid_choice = choices(&bundles, &pid.weights, game.samples());
        Ok(IdpContext { bundles, awares, game, pid, pid_choice, params: *params })
    }

    pub fn bundles(&self) -> &[WeightedBundle] {
        &self.bundles
    }

    pub fn peer_reaction(&self) -> &ReactionWeights {
        &self.pid
    }

    /// Most likely robot-free trajectory of pedestrian `i`.
    pub fn pid_trajectory(&self, i: usize) -> &Trajectory {
        &self.bundles[i].trajectories[self.pid_choice[i]]
    }

    /// Scores `robot`: total-influence game, determinization, max shift.
    pub fn evaluate(&self, robot: &Trajectory) -> Result<IdpOutcome> {
        let n = self.bundles.len();
        if n == 0 {
            return Ok(IdpOutcome { value: 0.0, per_ped: vec![], tid_choice: vec![], iterations: 0, converged: true });
        }
        let rob = self.game.robot_terms(&self.bundles, robot, &self.awares)?;
        if rob.iter().all(|r| *r == 0.0) {
            // no robot term fires: the total-influence game is the peer game
            return Ok(IdpOutcome {
                value: 0.0,
                per_ped: vec![0.0; n],
                tid_choice: self.pid_choice.clone(),
                iterations: self.pid.iterations,
                converged: self.pid.converged,
            });
        }
        let init = vec![1.0; rob.len()];
        let tid = self.game.react(&init, &rob, self.params.eps, self.params.max_iters)?;
        let tid_choice = choices(&self.bundles, &tid.weights, self.game.samples());
        let per_ped: Vec<f64> = (0..n)
            .map(|i| {
                let b = &self.bundles[i];
                traj_metric_unchecked(
                    b.trajectories[tid_choice[i]].points(),
                    b.trajectories[self.pid_choice[i]].points(),
                )
            })
            .collect();
        let value = per_ped.iter().copied().fold(0.0, f64::max);
        Ok(IdpOutcome { value, per_ped, tid_choice, iterations: tid.iterations, converged: tid.converged })
    }

    /// Most likely trajectory of pedestrian `i` under a given reaction.
    pub fn trajectory(&self, i: usize, choice: usize) -> &Trajectory {
        &self.bundles[i].trajectories[choice]
    }
}

fn choices(bundles: &[WeightedBundle], w: &[f64], m: usize) -> Vec<usize> {
    bundles
        .iter()
        .enumerate()
        .map(|(i, b)| determinize_weights(&w[i * m..][..m], &b.prior))
        .collect()
}

/// Individual disturbance penalty of `robot_traj` for a crowd: samples the
/// pedestrians on the robot trajectory's time base, solves both games and
/// returns the largest per-pedestrian shift.
pub fn idp(
    robot_traj: &Trajectory,
    peds: &[Pedestrian],
    awares: &[bool],
    map: &StaticMap,
    params: &IdpParams,
    rng: &Rng,
) -> Result<f64> {
    let ctx = IdpContext::new(peds, awares, map, robot_traj.t0(), robot_traj.dt(), robot_traj.len(), params, rng)?;
    Ok(ctx.evaluate(robot_traj)?.value)
}
