//! Geodesic distance to the goal over the static map, for progress terms.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::agent::ROBOT_RADIUS;
use crate::error::{invalid, Result};
use crate::geom::Vec2;
use crate::map::StaticMap;

/// Value reported where the goal is unreachable.
pub const UNREACHABLE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct CostToGo {
    goal: Vec2,
    map: StaticMap,
    origin: Vec2,
    res: f64,
    nx: usize,
    ny: usize,
    dist: Vec<f64>,
}

impl CostToGo {
    /// 8-connected Dijkstra from the goal over cells whose centre keeps the
    /// robot footprint clear of obstacles and walls.
    pub fn new(map: &StaticMap, goal: Vec2, res: f64) -> Result<Self> {
        if !(res > 0.0) {
            return Err(invalid("cost-to-go resolution must be positive"));
        }
        let b = map.bounds();
        let nx = (b.width() / res).ceil().max(1.0) as usize;
        let ny = (b.height() / res).ceil().max(1.0) as usize;
        let center = |ix: usize, iy: usize| b.min + Vec2::new((ix as f64 + 0.5) * res, (iy as f64 + 0.5) * res);
        let free: Vec<bool> =
            (0..nx * ny).map(|i| map.clearance(center(i % nx, i / nx)) >= ROBOT_RADIUS * 0.9).collect();
        let mut dist = vec![f64::INFINITY; nx * ny];
        let mut heap = BinaryHeap::new();
        // seed every free cell within reach of the goal
        let seed_r = 1.5 * res;
        for i in 0..nx * ny {
            let c = center(i % nx, i / nx);
            if free[i] && c.distance(goal) <= seed_r {
                dist[i] = c.distance(goal);
                heap.push(Reverse((dist[i].to_bits(), i)));
            }
        }
        if heap.is_empty() {
            // goal deep inside an obstacle or wall: seed the nearest free cell
            if let Some(i) = (0..nx * ny).filter(|&i| free[i]).min_by(|&a, &b| {
                center(a % nx, a / nx).distance(goal).total_cmp(&center(b % nx, b / nx).distance(goal))
            }) {
                dist[i] = center(i % nx, i / nx).distance(goal);
                heap.push(Reverse((dist[i].to_bits(), i)));
            }
        }
        let diag = res * std::f64::consts::SQRT_2;
        while let Some(Reverse((d, i))) = heap.pop() {
            let d = f64::from_bits(d);
            if d > dist[i] {
                continue;
            }
            let (ix, iy) = ((i % nx) as i64, (i / nx) as i64);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let (jx, jy) = (ix + dx, iy + dy);
                if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                    continue;
                }
                let j = jy as usize * nx + jx as usize;
                if !free[j] {
                    continue;
                }
                if dx != 0 && dy != 0 && !(free[iy as usize * nx + jx as usize] && free[jy as usize * nx + ix as usize]) {
                    continue;
                }
                let nd = d + if dx != 0 && dy != 0 { diag } else { res };
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Reverse((nd.to_bits(), j)));
                }
            }
        }
        Ok(CostToGo { goal, map: map.clone(), origin: b.min, res, nx, ny, dist })
    }

    pub fn goal(&self) -> Vec2 {
        self.goal
    }

    pub fn map(&self) -> &StaticMap {
        &self.map
    }

    /// Distance to the goal from `p`: exact when the goal is in line of
    /// sight, otherwise the best of the surrounding cell values plus the
    /// straight hop to that cell centre.
    pub fn value(&self, p: Vec2) -> f64 {
        if self.map.segment_free(p, self.goal, ROBOT_RADIUS * 0.9) {
            return p.distance(self.goal);
        }
        let fx = (p.x - self.origin.x) / self.res - 0.5;
        let fy = (p.y - self.origin.y) / self.res - 0.5;
        let (x0, y0) = (fx.floor() as i64, fy.floor() as i64);
        let mut best = f64::INFINITY;
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let (ix, iy) = (x0 + dx, y0 + dy);
            if ix < 0 || iy < 0 || ix >= self.nx as i64 || iy >= self.ny as i64 {
                continue;
            }
            let d = self.dist[iy as usize * self.nx + ix as usize];
            if d.is_finite() {
                let c = self.origin + Vec2::new((ix as f64 + 0.5) * self.res, (iy as f64 + 0.5) * self.res);
                best = best.min(d + c.distance(p));
            }
        }
        if best.is_finite() {
            best
        } else {
            UNREACHABLE
        }
    }

    /// Unit direction in which the cost-to-go falls fastest over a step of
    /// `lookahead` meters, chosen among 72 headings.
    pub fn descent_direction(&self, p: Vec2, lookahead: f64) -> Vec2 {
        let mut best = (f64::INFINITY, (self.goal - p).normalized().unwrap_or(Vec2::new(1.0, 0.0)));
        if p.distance(self.goal) <= lookahead || self.map.segment_free(p, self.goal, ROBOT_RADIUS * 0.9) {
            return best.1;
        }
        for k in 0..72 {
            let d = Vec2::from_angle(k as f64 * std::f64::consts::TAU / 72.0);
            let v = self.value(p + d * lookahead);
            if v < best.0 - 1e-12 {
                best = (v, d);
            }
        }
        best.1
    }
}
