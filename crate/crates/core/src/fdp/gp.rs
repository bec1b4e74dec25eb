//! Constant-velocity Gaussian-process prior on `[position, velocity]`
//! states.

use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Trajectory state: position and velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpState {
    pub pos: Vec2,
    pub vel: Vec2,
}

impl GpState {
    pub fn new(pos: Vec2, vel: Vec2) -> Self {
        GpState { pos, vel }
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.pos.x, self.pos.y, self.vel.x, self.vel.y)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        GpState { pos: Vec2::new(v[0], v[1]), vel: Vec2::new(v[2], v[3]) }
    }
}

/// State transition `[[I, dt I], [0, I]]`.
pub fn transition(dt: f64) -> Matrix4<f64> {
    let mut phi = Matrix4::identity();
    phi[(0, 2)] = dt;
    phi[(1, 3)] = dt;
    phi
}

fn check_spd(qc: &Matrix2<f64>) -> Result<()> {
    let symmetric = (qc[(0, 1)] - qc[(1, 0)]).abs() <= 1e-12 * (1.0 + qc.abs().max());
    if !symmetric || !qc.iter().all(|x| x.is_finite()) || qc.cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(())
}

/// Process covariance accumulated over `dt` for white-noise acceleration
/// with spectral density `qc`.
pub fn process_cov(dt: f64, qc: &Matrix2<f64>) -> Result<Matrix4<f64>> {
    check_spd(qc)?;
    if !(dt > 0.0) {
        return Err(crate::error::invalid("prior interval must be positive"));
    }
    let mut q = Matrix4::zeros();
    let blocks = [[dt.powi(3) / 3.0, dt * dt / 2.0], [dt * dt / 2.0, dt]];
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, s) in row.iter().enumerate() {
            q.fixed_view_mut::<2, 2>(2 * bi, 2 * bj).copy_from(&(qc * *s));
        }
    }
    Ok(q)
}

/// Prior error `xi - Phi xi_prev`.
pub fn prior_error(prev: &GpState, cur: &GpState, dt: f64) -> Vector4<f64> {
    cur.to_vector() - transition(dt) * prev.to_vector()
}

/// Whitening factor `W` with `W^T W = Q^-1`, so the prior residual is `W e`.
pub fn whitener(dt: f64, qc: &Matrix2<f64>) -> Result<Matrix4<f64>> {
    let q = process_cov(dt, qc)?;
    let l = q.cholesky().ok_or(Error::NotPositiveDefinite)?.l();
    l.try_inverse().ok_or(Error::NotPositiveDefinite)
}

/// `0.5 * sum e_i^T Q_i^-1 e_i` over consecutive states spaced `dt` apart.
pub fn prior_cost(states: &[GpState], dt: f64, qc: &Matrix2<f64>) -> Result<f64> {
    let w = whitener(dt, qc)?;
    Ok(states.windows(2).map(|s| 0.5 * (w * prior_error(&s[0], &s[1], dt)).norm_squared()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_velocity_has_zero_error() {
        let v = Vec2::new(0.7, -0.3);
        let states: Vec<GpState> =
            (0..6).map(|k| GpState::new(Vec2::new(1.0, 2.0) + v * (0.4 * k as f64), v)).collect();
        for s in states.windows(2) {
            assert!(prior_error(&s[0], &s[1], 0.4).norm() < 1e-12);
        }
        assert!(prior_cost(&states, 0.4, &(Matrix2::identity() * 0.5)).unwrap() < 1e-20);
    }

    #[test]
    fn non_spd_rejected() {
        let bad = Matrix2::new(1.0, 2.0, 2.0, 1.0);
        assert!(matches!(process_cov(0.5, &bad), Err(Error::NotPositiveDefinite)));
        assert!(process_cov(0.5, &Matrix2::new(1.0, 0.1, 0.0, 1.0)).is_err());
    }

    #[test]
    fn doubling_density_halves_cost() {
        let states = [
            GpState::new(Vec2::ZERO, Vec2::new(1.0, 0.0)),
            GpState::new(Vec2::new(0.3, 0.4), Vec2::new(0.2, 0.9)),
            GpState::new(Vec2::new(1.0, 0.2), Vec2::new(-0.5, 0.1)),
        ];
        let qc = Matrix2::new(0.5, 0.1, 0.1, 0.3);
        let a = prior_cost(&states, 0.5, &qc).unwrap();
        let b = prior_cost(&states, 0.5, &(qc * 2.0)).unwrap();
        assert_relative_eq!(b, a / 2.0, max_relative = 1e-12);
    }
}
