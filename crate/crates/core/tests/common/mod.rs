//! Helpers shared by the integration tests: random instances and
//! independent reference implementations.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crowdnav::fdp::SearchGraph;
use crowdnav::geom::Vec2;
use crowdnav::idp::PenaltyParams;
use crowdnav::idp::WeightedBundle;
use crowdnav::traj::Trajectory;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random walk trajectory on the shared test time base (t0 0.25, dt 0.25).
pub fn random_traj(r: &mut ChaCha8Rng, len: usize) -> Trajectory {
    let mut p = Vec2::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0));
    let v = Vec2::new(r.random_range(-1.2..1.2), r.random_range(-1.2..1.2));
    let pts = (0..len)
        .map(|_| {
            p += v * 0.25 + Vec2::new(r.random_range(-0.1..0.1), r.random_range(-0.1..0.1));
            p
        })
        .collect();
    Trajectory::new(0.25, 0.25, pts).unwrap()
}

pub fn random_bundle(r: &mut ChaCha8Rng, id: u32, m: usize, len: usize) -> WeightedBundle {
    let trajs = (0..m).map(|_| random_traj(r, len)).collect();
    let w = (0..m).map(|_| r.random_range(0.05..3.0)).collect();
    WeightedBundle::with_weights(id, trajs, w).unwrap()
}

/// Transport cost by linear programming.
pub fn lp_transport(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = cost
        .iter()
        .map(|row| row.iter().map(|c| lp.add_var(*c, (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, row) in vars.iter().enumerate() {
        lp.add_constraint(row.iter().map(|v| (*v, 1.0)), ComparisonOp::Eq, a[i] / sa);
    }
    // the last column constraint is implied by the others
    for k in 0..b.len() - 1 {
        lp.add_constraint(vars.iter().map(|row| (row[k], 1.0)), ComparisonOp::Eq, b[k] / sb);
    }
    lp.solve().unwrap().objective()
}

/// Mean pointwise distance, written out independently of the library.
pub fn mean_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let (p, q) = (a.points()[k], b.points()[k]);
        s += ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt();
    }
    s / a.len() as f64
}

pub fn lp_wasserstein(p: &WeightedBundle, q: &WeightedBundle) -> f64 {
    let cost: Vec<Vec<f64>> = p
        .trajectories
        .iter()
        .map(|a| q.trajectories.iter().map(|b| mean_distance(a, b)).collect())
        .collect();
    lp_transport(&p.weights, &q.weights, &cost)
}

/// Flow map holding the same field at every snapshot over `[0, horizon]`.
pub fn static_flowmap(
    map: &crowdnav::map::StaticMap,
    h: f64,
    horizon: f64,
    field: impl Fn(Vec2) -> (f64, Vec2),
) -> crowdnav::flowfield::FlowMap {
    use crowdnav::flowfield::{FlowGrid, FlowMap, FlowParams, FlowSnapshot};
    let grid = std::sync::Arc::new(FlowGrid::from_map(map, h).unwrap());
    let (mut rho, mut vel) = (Vec::new(), Vec::new());
    for iy in 0..grid.ny() {
        for ix in 0..grid.nx() {
            let (r, v) = field(grid.center(ix, iy));
            rho.push(r);
            vel.push(v);
        }
    }
    let params = FlowParams::default();
    let steps = (horizon / params.dt_flow).round() as usize;
    let snaps = (0..=steps)
        .map(|k| {
            FlowSnapshot::new(grid.clone(), k as f64 * params.dt_flow, rho.clone(), vel.clone(), vel.clone(), params)
                .unwrap()
        })
        .collect();
    FlowMap::from_snapshots(snaps, params.dt_flow).unwrap()
}

/// psi written out from its definition with an explicit power and max.
pub fn psi_oracle(ti: &Trajectory, tj: &Trajectory, robot: Option<&Trajectory>, aware: bool, pp: &PenaltyParams) -> f64 {
    let mut peer: f64 = 0.0;
    for t in 0..ti.len() {
        let d = ti.point(t).distance(tj.point(t));
        peer = peer.max(pp.gamma.powf(t as f64) * (-pp.b * (d - pp.th_peer)).exp());
    }
    let mut v = pp.c_ped * peer;
    if let (Some(r), true) = (robot, aware) {
        let close = (0..ti.len()).any(|t| ti.point(t).distance(r.point(t)) < pp.th_robot);
        if close {
            v += pp.c_obs;
        }
    }
    v
}

/// Plain Dijkstra over the search graph's adjacency lists.
pub fn dijkstra(g: &SearchGraph) -> Option<f64> {
    let mut dist = vec![f64::INFINITY; g.points.len()];
    let mut heap = BinaryHeap::new();
    dist[g.start] = 0.0;
    heap.push(Reverse((ordered(0.0), g.start)));
    while let Some(Reverse((d, u))) = heap.pop() {
        let d = f64::from_bits(d);
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &g.adj[u] {
            if d + w < dist[v] {
                dist[v] = d + w;
                heap.push(Reverse((ordered(d + w), v)));
            }
        }
    }
    dist[g.goal].is_finite().then_some(dist[g.goal])
}

// non-negative floats order like their bit patterns
pub fn ordered(x: f64) -> u64 {
    x.to_bits()
}
