//! Maximum a posteriori trajectory under the constant-velocity prior and the
//! flow-disturbance likelihood, solved with Levenberg–Marquardt.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};

use crate::error::{invalid, Error, Result};
use crate::flowfield::FlowMap;
use crate::geom::Vec2;

use super::gp::{prior_error, transition, whitener, GpState};
use super::likelihood::{disc_quadrature, flow_likelihood_at};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    pub qc: Matrix2<f64>,
    /// Scale of the disturbance residual.
    pub sigma_f: f64,
    /// Relative cost decrease below which the solver stops.
    pub f_tol: f64,
    pub max_iters: usize,
    /// Radius of the disc over which the robot disturbs the flow.
    pub radius: f64,
    pub quad_n: usize,
}

impl Default for MapParams {
    fn default() -> Self {
        MapParams {
            qc: Matrix2::identity() * 0.5,
            sigma_f: 0.5,
            f_tol: 1e-3,
            max_iters: 50,
            radius: 1.0,
            quad_n: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub states: Vec<GpState>,
    pub t0: f64,
    pub dt: f64,
    /// Objective after every accepted step, starting with the initial value.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of the per-segment disturbance values along the optimum.
    pub disturbance: f64,
}

/// Least-squares problem over the interior states and all velocities; the
/// first and last positions stay fixed.
pub struct MapProblem<'a> {
    pub t0: f64,
    pub dt: f64,
    n: usize,
    start: Vec2,
    end: Vec2,
    phi: Matrix4<f64>,
    w: Matrix4<f64>,
    nodes: Vec<(Vec2, f64)>,
    fm: &'a FlowMap,
    sigma_f: f64,
}

const FD_STEP: f64 = 1e-6;

impl<'a> MapProblem<'a> {
    /// Problem with `segments` intervals of `dt` from `start` to `end`.
    pub fn new(start: Vec2, end: Vec2, segments: usize, t0: f64, dt: f64, fm: &'a FlowMap, p: &MapParams) -> Result<Self> {
        if segments == 0 {
            return Err(invalid("at least one segment required"));
        }
        if !(p.sigma_f > 0.0) {
            return Err(invalid("disturbance scale must be positive"));
        }
        Ok(MapProblem {
            t0,
            dt,
            n: segments,
            start,
            end,
            phi: transition(dt),
            w: whitener(dt, &p.qc)?,
            nodes: disc_quadrature(p.radius, p.quad_n)?,
            fm,
            sigma_f: p.sigma_f,
        })
    }

    pub fn dim(&self) -> usize {
        4 * self.n
    }

    pub fn residual_len(&self) -> usize {
        5 * self.n
    }

    /// Column of component `c` (0..4) of state `i`, if it is free.
    fn col(&self, i: usize, c: usize) -> Option<usize> {
        if i == 0 {
            (c >= 2).then(|| c - 2)
        } else if i == self.n {
            (c >= 2).then(|| 4 * self.n - 4 + c)
        } else {
            Some(2 + 4 * (i - 1) + c)
        }
    }

    pub fn states(&self, x: &DVector<f64>) -> Vec<GpState> {
        (0..=self.n)
            .map(|i| {
                let g = |c: usize| self.col(i, c).map(|j| x[j]);
                let pos = match i {
                    0 => self.start,
                    i if i == self.n => self.end,
                    _ => Vec2::new(g(0).unwrap(), g(1).unwrap()),
                };
                GpState::new(pos, Vec2::new(g(2).unwrap(), g(3).unwrap()))
            })
            .collect()
    }

    pub fn pack(&self, states: &[GpState]) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for (i, s) in states.iter().enumerate() {
            let v = s.to_vector();
            for c in 0..4 {
                if let Some(j) = self.col(i, c) {
                    x[j] = v[c];
                }
            }
        }
        x
    }

    fn h_mid(&self, seg: usize, m: &Vector4<f64>) -> f64 {
        let s = GpState::from_vector(m);
        flow_likelihood_at(&s, &s, self.t0 + seg as f64 * self.dt, self.dt, self.fm, &self.nodes)
    }

    /// Per-segment disturbance values.
    pub fn disturbances(&self, states: &[GpState]) -> Vec<f64> {
        states
            .windows(2)
            .enumerate()
            .map(|(k, s)| flow_likelihood_at(&s[0], &s[1], self.t0 + k as f64 * self.dt, self.dt, self.fm, &self.nodes))
            .collect()
    }

    pub fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let st = self.states(x);
        let mut r = DVector::zeros(self.residual_len());
        for i in 1..=self.n {
            let e = self.w * prior_error(&st[i - 1], &st[i], self.dt);
            r.fixed_rows_mut::<4>(5 * (i - 1)).copy_from(&e);
        }
        for (k, h) in self.disturbances(&st).into_iter().enumerate() {
            r[5 * k + 4] = h / self.sigma_f;
        }
        r
    }

    /// Analytic prior rows; disturbance rows by central differences on the
    /// segment midpoint state.
    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let st = self.states(x);
        let mut j = DMatrix::zeros(self.residual_len(), self.dim());
        let prev_block = -(self.w * self.phi);
        for i in 1..=self.n {
            let row = 5 * (i - 1);
            for c in 0..4 {
                if let Some(col) = self.col(i - 1, c) {
                    for r in 0..4 {
                        j[(row + r, col)] += prev_block[(r, c)];
                    }
                }
                if let Some(col) = self.col(i, c) {
                    for r in 0..4 {
                        j[(row + r, col)] += self.w[(r, c)];
                    }
                }
            }
            let m = (st[i - 1].to_vector() + st[i].to_vector()) * 0.5;
            for c in 0..4 {
                let mut up = m;
                let mut dn = m;
                up[c] += FD_STEP;
                dn[c] -= FD_STEP;
                let d = (self.h_mid(i - 1, &up) - self.h_mid(i - 1, &dn)) / (2.0 * FD_STEP) / self.sigma_f;
                for s in [i - 1, i] {
                    if let Some(col) = self.col(s, c) {
                        j[(row + 4, col)] += 0.5 * d;
                    }
                }
            }
        }
        j
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.residuals(x).norm_squared()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.jacobian(x).transpose() * self.residuals(x)
    }
}

/// Runs Levenberg–Marquardt from `init` (whose first and last positions
/// fix the endpoints). Only improving steps are accepted, so the recorded
/// cost history never increases.
pub fn optimize_map(init: &[GpState], t0: f64, dt: f64, fm: &FlowMap, p: &MapParams) -> Result<MapResult> {
    if init.len() < 2 {
        return Err(invalid("need at least two states"));
    }
    if init.iter().any(|s| !s.pos.is_finite() || !s.vel.is_finite()) {
        return Err(Error::NonFinite);
    }
    let prob = MapProblem::new(init[0].pos, init[init.len() - 1].pos, init.len() - 1, t0, dt, fm, p)?;
    let mut x = prob.pack(init);
    let mut r = prob.residuals(&x);
    let mut f = 0.5 * r.norm_squared();
    if !f.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut history = vec![f];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < p.max_iters {
        iterations += 1;
        if f < 1e-18 {
            converged = true;
            break;
        }
        let jac = prob.jacobian(&x);
        if jac.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * (jtj[(k, k)] + 1e-12);
            }
            let Some(ch) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = ch.solve(&(-&g));
            let xn = &x + step;
            let rn = prob.residuals(&xn);
            let fn_ = 0.5 * rn.norm_squared();
            if !fn_.is_finite() {
                return Err(Error::NonFinite);
            }
            if fn_ < f {
                let rel = (f - fn_) / f;
                x = xn;
                r = rn;
                f = fn_;
                history.push(f);
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < p.f_tol {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no descent at any damping: stationary to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    let states = prob.states(&x);
    let disturbance = prob.disturbances(&states).iter().sum();
    Ok(MapResult { states, t0, dt, cost_history: history, iterations, converged, disturbance })
}
