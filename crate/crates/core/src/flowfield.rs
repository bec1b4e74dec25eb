//! Pedestrian flow fields: kernel estimation of density and velocity,
//! forward propagation under mass and momentum conservation, and
//! spatio-temporal interpolation queries.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::Pedestrian;
use crate::error::{invalid, Error, Result};
use crate::geom::{Rect, Vec2};
use crate::map::StaticMap;

/// Kernel support is cut off at this multiple of the kernel radius.
pub const KERNEL_TRUNCATION: f64 = 3.0;
/// Velocity (and density-normalized quantities) vanish below this weight.
pub const EPS_DEN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    /// Grid cell size in meters.
    pub h: f64,
    /// Interval between stored snapshots in seconds.
    pub dt_flow: f64,
    pub kernel_radius: f64,
    pub tau_relax: f64,
    /// Density-pressure coefficient.
    pub c_p: f64,
    /// When false the momentum source term is dropped.
    pub forcing: bool,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams { h: 0.5, dt_flow: 0.5, kernel_radius: 1.0, tau_relax: 1.0, c_p: 0.5, forcing: true }
    }
}

/// Kernel weight `exp(-|d|^2) / (pi R^2)` for squared distance `d2`.
pub fn kernel(d2: f64, radius: f64) -> f64 {
    (-d2).exp() / (std::f64::consts::PI * radius * radius)
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("kernel radius must be positive, got {radius}")))
    }
}

/// Kernel-weighted sums of (1, v, v_des) over pedestrians near `q`.
fn kernel_sums(peds: &[Pedestrian], q: Vec2, radius: f64) -> (f64, Vec2, Vec2) {
    let cutoff2 = (KERNEL_TRUNCATION * radius).powi(2);
    let mut w = 0.0;
    let mut v = Vec2::ZERO;
    let mut d = Vec2::ZERO;
    for p in peds {
        let d2 = (p.pos - q).norm_sq();
        if d2 <= cutoff2 {
            let f = kernel(d2, radius);
            w += f;
            v += p.vel * f;
            d += p.desired_velocity() * f;
        }
    }
    (w, v, d)
}

/// Crowd density at `q` in persons per square meter.
pub fn estimate_density(peds: &[Pedestrian], q: Vec2, radius: f64) -> Result<f64> {
    check_radius(radius)?;
    Ok(kernel_sums(peds, q, radius).0)
}

/// Kernel-weighted mean pedestrian velocity at `q`; zero in empty space.
pub fn estimate_velocity(peds: &[Pedestrian], q: Vec2, radius: f64) -> Result<Vec2> {
    check_radius(radius)?;
    let (w, v, _) = kernel_sums(peds, q, radius);
    Ok(if w < EPS_DEN { Vec2::ZERO } else { v / w })
}

/// Cell-centered grid over a map; cells whose center is not free are blocked.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGrid {
    bounds: Rect,
    h: f64,
    nx: usize,
    ny: usize,
    blocked: Vec<bool>,
    periodic: bool,
}

impl FlowGrid {
    pub fn from_map(map: &StaticMap, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("grid resolution must be positive"));
        }
        let b = map.bounds();
        let nx = ((b.width() / h) - 1e-9).ceil().max(1.0) as usize;
        let ny = ((b.height() / h) - 1e-9).ceil().max(1.0) as usize;
        let mut g = FlowGrid { bounds: b, h, nx, ny, blocked: vec![false; nx * ny], periodic: false };
        for iy in 0..ny {
            for ix in 0..nx {
                let c = g.center(ix, iy);
                g.blocked[iy * nx + ix] = map.in_obstacle(c);
            }
        }
        Ok(g)
    }

    /// Obstacle-free grid whose opposite edges wrap around.
    pub fn periodic(bounds: Rect, h: f64) -> Result<Self> {
        let mut g = FlowGrid::from_map(&StaticMap::open(bounds), h)?;
        g.periodic = true;
        Ok(g)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn is_blocked(&self, ix: usize, iy: usize) -> bool {
        self.blocked[self.index(ix, iy)]
    }

    pub fn center(&self, ix: usize, iy: usize) -> Vec2 {
        self.bounds.min + Vec2::new((ix as f64 + 0.5) * self.h, (iy as f64 + 0.5) * self.h)
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Neighbor index in direction `dir` (0:+x, 1:-x, 2:+y, 3:-y), or None at
    /// walls and blocked cells.
    fn neighbor(&self, ix: usize, iy: usize, dir: usize) -> Option<usize> {
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        let (mut jx, mut jy) = (ix as isize, iy as isize);
        match dir {
            0 => jx += 1,
            1 => jx -= 1,
            2 => jy += 1,
            _ => jy -= 1,
        }
        if self.periodic {
            jx = jx.rem_euclid(nx);
            jy = jy.rem_euclid(ny);
        } else if jx < 0 || jy < 0 || jx >= nx || jy >= ny {
            return None;
        }
        let j = jy as usize * self.nx + jx as usize;
        (!self.blocked[j]).then_some(j)
    }
}

/// Outward velocity component of `v` through face `dir`.
fn outward(v: Vec2, dir: usize) -> f64 {
    match dir {
        0 => v.x,
        1 => -v.x,
        2 => v.y,
        _ => -v.y,
    }
}

const OPPOSITE: [usize; 4] = [1, 0, 3, 2];

/// Density and mean velocity on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSnapshot {
    grid: Arc<FlowGrid>,
    time: f64,
    rho: Vec<f64>,
    vel: Vec<Vec2>,
    desired: Vec<Vec2>,
    params: FlowParams,
    clamped: usize,
}

impl FlowSnapshot {
    /// Builds a snapshot from explicit fields. `desired` is the velocity each
    /// cell relaxes toward.
    pub fn new(
        grid: Arc<FlowGrid>,
        time: f64,
        rho: Vec<f64>,
        vel: Vec<Vec2>,
        desired: Vec<Vec2>,
        params: FlowParams,
    ) -> Result<Self> {
        let n = grid.len();
        if rho.len() != n || vel.len() != n || desired.len() != n {
            return Err(invalid(format!("flow fields must have {n} cells")));
        }
        if rho.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(invalid("density must be finite and nonnegative"));
        }
        if vel.iter().chain(&desired).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut s = FlowSnapshot { grid, time, rho, vel, desired, params, clamped: 0 };
        for i in 0..n {
            if s.grid.blocked[i] {
                s.rho[i] = 0.0;
                s.vel[i] = Vec2::ZERO;
                s.desired[i] = Vec2::ZERO;
            }
        }
        Ok(s)
    }

    /// Uniform density and velocity everywhere; cells relax toward `vel`.
    pub fn uniform(grid: Arc<FlowGrid>, rho: f64, vel: Vec2, params: FlowParams) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, 0.0, vec![rho; n], vec![vel; n], vec![vel; n], params)
    }

    /// Kernel estimate of the fields at every cell center.
    pub fn from_pedestrians(
        peds: &[Pedestrian],
        grid: Arc<FlowGrid>,
        time: f64,
        params: FlowParams,
    ) -> Result<Self> {
        check_radius(params.kernel_radius)?;
        let n = grid.len();
        let mut rho = vec![0.0; n];
        let mut vel = vec![Vec2::ZERO; n];
        let mut desired = vec![Vec2::ZERO; n];
        if !peds.is_empty() {
            for iy in 0..grid.ny {
                for ix in 0..grid.nx {
                    let i = grid.index(ix, iy);
                    if grid.blocked[i] {
                        continue;
                    }
                    let (w, v, d) = kernel_sums(peds, grid.center(ix, iy), params.kernel_radius);
                    rho[i] = w;
                    if w >= EPS_DEN {
                        vel[i] = v / w;
                        desired[i] = d / w;
                    }
                }
            }
        }
        Self::new(grid, time, rho, vel, desired, params)
    }

    pub fn grid(&self) -> &FlowGrid {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn density(&self, ix: usize, iy: usize) -> f64 {
        self.rho[self.grid.index(ix, iy)]
    }

    pub fn velocity(&self, ix: usize, iy: usize) -> Vec2 {
        self.vel[self.grid.index(ix, iy)]
    }

    pub fn densities(&self) -> &[f64] {
        &self.rho
    }

    pub fn velocities(&self) -> &[Vec2] {
        &self.vel
    }

    /// Number of cells whose density had to be clamped at zero in the step
    /// that produced this snapshot.
    pub fn clamped_cells(&self) -> usize {
        self.clamped
    }

    /// Total number of persons on the grid.
    pub fn total_mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Largest step satisfying the CFL condition `dt <= h / (2 v)`, with `v`
    /// the largest per-cell L1 speed.
    pub fn max_stable_dt(&self) -> f64 {
        let v = self
            .vel
            .iter()
            .zip(&self.rho)
            .filter(|(_, r)| **r > 0.0)
            .map(|(v, _)| v.x.abs() + v.y.abs())
            .fold(0.0, f64::max);
        if v > 0.0 {
            self.grid.h / (2.0 * v)
        } else {
            f64::INFINITY
        }
    }

    /// Density-weighted mean position.
    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::ZERO;
        let mut m = 0.0;
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                let r = self.density(ix, iy);
                c += self.grid.center(ix, iy) * r;
                m += r;
            }
        }
        if m > 0.0 {
            c / m
        } else {
            Vec2::ZERO
        }
    }
}

/// One forward-Euler step of the conservation laws.
///
/// Mass and momentum move by donor-cell upwinding: each cell exports the
/// fraction `u dt / h` of its contents through every face its velocity
/// points out of. Faces touching walls or blocked cells carry no flux. The
/// momentum source relaxes velocity toward the transported desired velocity
/// and pushes away from density gradients.
pub fn propagate(s: &FlowSnapshot, dt: f64) -> Result<FlowSnapshot> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("propagation step must be positive"));
    }
    let max_dt = s.max_stable_dt();
    if dt > max_dt * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, max_dt });
    }
    let g = &*s.grid;
    let n = g.len();
    let k = dt / g.h;

    // export fractions per cell and direction
    let mut frac = vec![[0.0f64; 4]; n];
    let mut nbr = vec![[None::<usize>; 4]; n];
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let i = g.index(ix, iy);
            if g.blocked[i] {
                continue;
            }
            for d in 0..4 {
                nbr[i][d] = g.neighbor(ix, iy, d);
                if nbr[i][d].is_some() {
                    frac[i][d] = outward(s.vel[i], d).max(0.0) * k;
                }
            }
        }
    }

    let mut rho = s.rho.clone();
    let mut vel = s.vel.clone();
    let mut desired = s.desired.clone();
    let mut clamped = 0;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let i = g.index(ix, iy);
            if g.blocked[i] {
                continue;
            }
            let (r0, v0, d0) = (s.rho[i], s.vel[i], s.desired[i]);
            let (mut m_in, mut m_out) = (0.0, 0.0);
            let (mut p_in, mut p_out) = (Vec2::ZERO, Vec2::ZERO);
            let (mut q_in, mut q_out) = (Vec2::ZERO, Vec2::ZERO);
            for d in 0..4 {
                let f = frac[i][d];
                m_out += f * r0;
                p_out += v0 * (f * r0);
                q_out += d0 * (f * r0);
                // inflow arrives from the neighbor on the opposite side
                if let Some(j) = nbr[i][OPPOSITE[d]] {
                    let fj = frac[j][d] * s.rho[j];
                    m_in += fj;
                    p_in += s.vel[j] * fj;
                    q_in += s.desired[j] * fj;
                }
            }
            let dm = m_in - m_out;
            let mut r1 = r0 + dm;
            if r1 < 0.0 {
                clamped += 1;
                r1 = 0.0;
            }
            rho[i] = r1;
            if r1 < EPS_DEN {
                vel[i] = Vec2::ZERO;
                desired[i] = Vec2::ZERO;
                continue;
            }
            // v1 = (r0 v0 + dp) / r1, written so that zero net flux leaves v0 untouched
            let mut v1 = v0 + ((p_in - p_out) - v0 * dm) / r1;
            let d1 = d0 + ((q_in - q_out) - d0 * dm) / r1;
            if s.params.forcing {
                v1 += forcing(s, ix, iy, v0, d0) * dt;
            }
            vel[i] = v1;
            desired[i] = d1;
        }
    }
    Ok(FlowSnapshot {
        grid: s.grid.clone(),
        time: s.time + dt,
        rho,
        vel,
        desired,
        params: s.params,
        clamped,
    })
}

/// Momentum source `(v_des - v) / tau - c_p grad(rho)` at a cell.
fn forcing(s: &FlowSnapshot, ix: usize, iy: usize, v: Vec2, v_des: Vec2) -> Vec2 {
    let g = &*s.grid;
    let i = g.index(ix, iy);
    let side = |d: usize| g.neighbor(ix, iy, d).map_or(s.rho[i], |j| s.rho[j]);
    let grad = Vec2::new((side(0) - side(1)) / (2.0 * g.h), (side(2) - side(3)) / (2.0 * g.h));
    (v_des - v) / s.params.tau_relax - grad * s.params.c_p
}

/// A time-ordered sequence of flow snapshots at a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    snapshots: Vec<FlowSnapshot>,
    dt_flow: f64,
}

impl FlowMap {
    pub fn from_snapshots(snapshots: Vec<FlowSnapshot>, dt_flow: f64) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(invalid("flow map needs at least one snapshot"));
        }
        if !(dt_flow > 0.0) {
            return Err(invalid("flow map interval must be positive"));
        }
        Ok(FlowMap { snapshots, dt_flow })
    }

    pub fn snapshots(&self) -> &[FlowSnapshot] {
        &self.snapshots
    }

    pub fn dt_flow(&self) -> f64 {
        self.dt_flow
    }

    pub fn kernel_radius(&self) -> f64 {
        self.snapshots[0].params.kernel_radius
    }

    pub fn grid(&self) -> &FlowGrid {
        &self.snapshots[0].grid
    }

    pub fn start_time(&self) -> f64 {
        self.snapshots[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.start_time() + (self.snapshots.len() - 1) as f64 * self.dt_flow
    }

    /// Interpolated (density, velocity) at `q` and absolute time `t`.
    pub fn query(&self, q: Vec2, t: f64) -> Result<(f64, Vec2)> {
        let tol = 1e-9;
        if !(t >= self.start_time() - tol && t <= self.end_time() + tol) {
            return Err(Error::OutOfRange(format!(
                "time {t} outside [{}, {}]",
                self.start_time(),
                self.end_time()
            )));
        }
        let b = self.grid().bounds;
        if !(q.x >= b.min.x - tol && q.x <= b.max.x + tol && q.y >= b.min.y - tol && q.y <= b.max.y + tol) {
            return Err(Error::OutOfRange(format!("point ({}, {}) outside the grid", q.x, q.y)));
        }
        Ok(self.sample(q, t))
    }

    /// Like [`FlowMap::query`] but returns zero flow outside the covered
    /// region instead of failing.
    pub fn query_or_zero(&self, q: Vec2, t: f64) -> (f64, Vec2) {
        self.query(q, t).unwrap_or((0.0, Vec2::ZERO))
    }

    /// Flux vector `rho * v` at `q`, `t`.
    pub fn flux(&self, q: Vec2, t: f64) -> Result<Vec2> {
        let (r, v) = self.query(q, t)?;
        Ok(v * r)
    }

    fn sample(&self, q: Vec2, t: f64) -> (f64, Vec2) {
        let last = self.snapshots.len() - 1;
        let s = ((t - self.start_time()) / self.dt_flow).clamp(0.0, last as f64);
        let k = (s.floor() as usize).min(last.saturating_sub(1));
        let a = s - k as f64;
        let (r0, v0) = bilinear(&self.snapshots[k], q);
        if last == 0 || a == 0.0 {
            return (r0, v0);
        }
        let (r1, v1) = bilinear(&self.snapshots[k + 1], q);
        (r0 + (r1 - r0) * a, v0 + (v1 - v0) * a)
    }

    /// Writes one `t,ix,iy,rho,vx,vy` record per cell and snapshot.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,ix,iy,rho,vx,vy")?;
        for s in &self.snapshots {
            let g = s.grid();
            for iy in 0..g.ny {
                for ix in 0..g.nx {
                    let v = s.velocity(ix, iy);
                    writeln!(w, "{},{},{},{},{},{}", s.time, ix, iy, s.density(ix, iy), v.x, v.y)?;
                }
            }
        }
        Ok(())
    }
}

/// Bilinear interpolation between cell centers; constant beyond the outer
/// centers.
fn bilinear(s: &FlowSnapshot, q: Vec2) -> (f64, Vec2) {
    let g = &*s.grid;
    let axis = |x: f64, n: usize| -> (usize, f64) {
        let f = (x / g.h - 0.5).clamp(0.0, (n - 1) as f64);
        let i = (f.floor() as usize).min(n.saturating_sub(2));
        (i, if n == 1 { 0.0 } else { f - i as f64 })
    };
    let (ix, ax) = axis(q.x - g.bounds.min.x, g.nx);
    let (iy, ay) = axis(q.y - g.bounds.min.y, g.ny);
    let jx = (ix + 1).min(g.nx - 1);
    let jy = (iy + 1).min(g.ny - 1);
    let c = |x: usize, y: usize| {
        let i = g.index(x, y);
        (s.rho[i], s.vel[i])
    };
    let (r00, v00) = c(ix, iy);
    let (r10, v10) = c(jx, iy);
    let (r01, v01) = c(ix, jy);
    let (r11, v11) = c(jx, jy);
    let w00 = (1.0 - ax) * (1.0 - ay);
    let w10 = ax * (1.0 - ay);
    let w01 = (1.0 - ax) * ay;
    let w11 = ax * ay;
    (
        r00 * w00 + r10 * w10 + r01 * w01 + r11 * w11,
        v00 * w00 + v10 * w10 + v01 * w01 + v11 * w11,
    )
}

/// Interpolated (density, velocity) at `q` and time `t`.
pub fn flux_query(fm: &FlowMap, q: Vec2, t: f64) -> Result<(f64, Vec2)> {
    fm.query(q, t)
}

/// Estimates the current flow from `peds` and propagates it without any
/// robot influence for `horizon` seconds, storing a snapshot every
/// `params.dt_flow` seconds starting at `t0`.
pub fn build_flowmap(
    peds: &[Pedestrian],
    map: &StaticMap,
    horizon: f64,
    t0: f64,
    params: FlowParams,
) -> Result<FlowMap> {
    if !(horizon > 0.0) {
        return Err(invalid("flow map horizon must be positive"));
    }
    if !(params.dt_flow > 0.0) {
        return Err(invalid("flow map interval must be positive"));
    }
    let grid = Arc::new(FlowGrid::from_map(map, params.h)?);
    let first = FlowSnapshot::from_pedestrians(peds, grid, t0, params)?;
    build_from_snapshot(first, horizon)
}

/// Propagates `first` for `horizon` seconds, sub-stepping as the CFL
/// condition requires.
pub fn build_from_snapshot(first: FlowSnapshot, horizon: f64) -> Result<FlowMap> {
    let dt_flow = first.params.dt_flow;
    let steps = (horizon / dt_flow - 1e-9).ceil().max(1.0) as usize;
    let t0 = first.time;
    let mut snaps = Vec::with_capacity(steps + 1);
    snaps.push(first);
    for k in 1..=steps {
        let mut s = snaps[k - 1].clone();
        let mut remaining = dt_flow;
        while remaining > 1e-12 {
            let m = s.max_stable_dt();
            let n = (remaining / m).ceil().max(1.0);
            let step = remaining / n;
            s = propagate(&s, step)?;
            remaining -= step;
        }
        s.time = t0 + k as f64 * dt_flow;
        snaps.push(s);
    }
    FlowMap::from_snapshots(snaps, dt_flow)
}
