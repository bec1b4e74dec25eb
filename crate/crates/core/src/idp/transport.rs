//! Exact discrete optimal transport between weighted bundles.

use crate::error::{Error, Result};
use crate::traj::traj_metric;

use super::bundle::WeightedBundle;

const MASS_TOL: f64 = 1e-15;

/// Earth mover's distance between the normalized weights of two bundles,
/// with the time-averaged trajectory distance as ground cost.
pub fn wasserstein(p1: &WeightedBundle, p2: &WeightedBundle) -> Result<f64> {
    let a = p1.probabilities()?;
    let b = p2.probabilities()?;
    let mut cost = vec![vec![0.0; b.len()]; a.len()];
    for (j, ta) in p1.trajectories.iter().enumerate() {
        for (k, tb) in p2.trajectories.iter().enumerate() {
            cost[j][k] = traj_metric(ta, tb)?;
        }
    }
    Ok(transport(&a, &b, &cost)?.0)
}

/// Minimum-cost transport plan between probability vectors `a` and `b`
/// for a nonnegative cost matrix, by successive shortest augmenting paths
/// with Dijkstra on reduced costs. Returns the optimal cost and the plan.
pub fn transport(a: &[f64], b: &[f64], cost: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    let (ra, rb) = (a.len(), b.len());
    if ra == 0 || rb == 0 || cost.len() != ra || cost.iter().any(|r| r.len() != rb) {
        return Err(Error::LengthMismatch(ra, rb));
    }
    if a.iter().chain(b).any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::NotNormalizable);
    }
    if cost.iter().flatten().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if !(sa > 0.0 && sb > 0.0) {
        return Err(Error::NotNormalizable);
    }
    let mut supply: Vec<f64> = a.iter().map(|x| x / sa).collect();
    let mut demand: Vec<f64> = b.iter().map(|x| x / sb).collect();
    let mut flow = vec![vec![0.0; rb]; ra];
    // node ids: rows 0..ra, columns ra..ra+rb
    let nodes = ra + rb;
    let mut pot = vec![0.0; nodes];
    let mut dist = vec![0.0; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    for _ in 0..(4 * nodes * nodes + 16) {
        let remaining: f64 = supply.iter().sum();
        if remaining <= MASS_TOL * nodes as f64 {
            break;
        }
        // multi-source Dijkstra from rows with remaining supply
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for (i, s) in supply.iter().enumerate() {
            if *s > MASS_TOL {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < ra {
                for k in 0..rb {
                    let v = ra + k;
                    let rc = (cost[u][k] + pot[u] - pot[v]).max(0.0);
                    if dist[u] + rc < dist[v] {
                        dist[v] = dist[u] + rc;
                        parent[v] = u;
                    }
                }
            } else {
                let k = u - ra;
                for i in 0..ra {
                    if flow[i][k] > MASS_TOL {
                        let rc = (-cost[i][k] + pot[u] - pot[i]).max(0.0);
                        if dist[u] + rc < dist[i] {
                            dist[i] = dist[u] + rc;
                            parent[i] = u;
                        }
                    }
                }
            }
        }
        // nearest column with unmet demand
        let sink = (0..rb)
            .filter(|k| demand[*k] > MASS_TOL && dist[ra + k].is_finite())
            .min_by(|x, y| dist[ra + x].total_cmp(&dist[ra + y]));
        let Some(k) = sink else { break };
        let horizon = dist[ra + k];
        for v in 0..nodes {
            pot[v] += dist[v].min(horizon);
        }
        // walk back to the source row, finding the bottleneck
        let mut delta = demand[k];
        let mut v = ra + k;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u >= ra {
                delta = delta.min(flow[v][u - ra]);
            }
            v = u;
        }
        delta = delta.min(supply[v]);
        let source = v;
        let mut v = ra + k;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u < ra {
                flow[u][v - ra] += delta;
            } else {
                flow[v][u - ra] -= delta;
            }
            v = u;
        }
        supply[source] -= delta;
        demand[k] -= delta;
    }
    let total = flow
        .iter()
        .zip(cost)
        .map(|(f, c)| f.iter().zip(c).map(|(x, y)| x.max(0.0) * y).sum::<f64>())
        .sum();
    Ok((total, flow))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::traj::Trajectory;

    fn line(y: f64) -> Trajectory {
        Trajectory::new(0.0, 0.25, (0..16).map(|k| Vec2::new(0.1 * k as f64, y)).collect()).unwrap()
    }

    #[test]
    fn identical_bundles_are_zero_apart() {
        let b = WeightedBundle::with_weights(0, vec![line(0.0), line(1.0), line(3.0)], vec![0.2, 1.5, 1.3]).unwrap();
        assert_eq!(wasserstein(&b, &b).unwrap(), 0.0);
    }

    #[test]
    fn point_masses_cost_the_ground_distance() {
        let trajs = vec![line(0.0), line(2.0), line(5.0)];
        let p = WeightedBundle::with_weights(0, trajs.clone(), vec![1.0, 0.0, 0.0]).unwrap();
        let q = WeightedBundle::with_weights(0, trajs, vec![0.0, 0.0, 4.0]).unwrap();
        assert!((wasserstein(&p, &q).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_are_not_normalizable() {
        let p = WeightedBundle::with_weights(0, vec![line(0.0), line(1.0)], vec![0.0, 0.0]).unwrap();
        let q = WeightedBundle::new(0, vec![line(0.0), line(1.0)]).unwrap();
        assert!(matches!(wasserstein(&p, &q), Err(Error::NotNormalizable)));
    }

    #[test]
    fn needs_backward_edges() {
        // greedy nearest assignment is suboptimal here
        let cost = vec![vec![1.0, 2.0], vec![1.0, 10.0]];
        let (c, plan) = transport(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert!((c - 1.5).abs() < 1e-12, "cost {c} plan {plan:?}");
    }
}
