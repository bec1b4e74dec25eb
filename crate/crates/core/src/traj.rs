//! Uniformly time-stamped 2-D trajectories and the distances between them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::Vec2;

const TIME_TOL: f64 = 1e-9;

/// Waypoints at `t0 + k * dt`, `k = 0..len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    points: Vec<Vec2>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, points: Vec<Vec2>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(invalid(format!("trajectory needs finite t0 and dt > 0 (dt = {dt})")));
        }
        if points.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(invalid("trajectory points must be finite"));
        }
        Ok(Trajectory { t0, dt, points })
    }

    /// A trajectory that stays at `p` for `len` steps.
    pub fn stationary(t0: f64, dt: f64, p: Vec2, len: usize) -> Result<Self> {
        Self::new(t0, dt, vec![p; len])
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn point(&self, k: usize) -> Vec2 {
        self.points[k]
    }

    pub fn first(&self) -> Vec2 {
        self.points[0]
    }

    pub fn last(&self) -> Vec2 {
        self.points[self.points.len() - 1]
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time_at(self.len() - 1)
    }

    /// Finite-difference velocity at each waypoint (forward differences,
    /// the last point repeats the previous one).
    pub fn velocities(&self) -> Vec<Vec2> {
        let n = self.points.len();
        if n == 1 {
            return vec![Vec2::ZERO];
        }
        (0..n)
            .map(|k| {
                let (a, b) = if k + 1 < n { (k, k + 1) } else { (k - 1, k) };
                (self.points[b] - self.points[a]) / self.dt
            })
            .collect()
    }

    /// Largest spacing between consecutive waypoints divided by dt.
    pub fn max_step_speed(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0].distance(w[1]) / self.dt)
            .fold(0.0, f64::max)
    }

    /// Linear interpolation; clamps outside the covered interval.
    pub fn position_at(&self, t: f64) -> Vec2 {
        let s = (t - self.t0) / self.dt;
        if s <= 0.0 {
            return self.first();
        }
        let k = s.floor() as usize;
        if k + 1 >= self.points.len() {
            return self.last();
        }
        self.points[k].lerp(self.points[k + 1], s - k as f64)
    }

    /// Resamples onto a new step over the same time span.
    pub fn resample(&self, dt: f64) -> Result<Trajectory> {
        if !(dt > 0.0) {
            return Err(invalid("resample dt must be positive"));
        }
        if (dt - self.dt).abs() <= f64::EPSILON * self.dt {
            return Ok(self.clone());
        }
        let span = self.end_time() - self.t0;
        let n = (span / dt + 1e-9).floor() as usize + 1;
        let pts = (0..n).map(|k| self.position_at(self.t0 + k as f64 * dt)).collect();
        Trajectory::new(self.t0, dt, pts)
    }

    pub fn same_time_base(&self, other: &Trajectory) -> bool {
        (self.t0 - other.t0).abs() <= TIME_TOL && (self.dt - other.dt).abs() <= TIME_TOL * 1e-3
    }

    pub(crate) fn check_time_base(&self, other: &Trajectory) -> Result<()> {
        if self.same_time_base(other) {
            Ok(())
        } else {
            Err(Error::TimeBaseMismatch {
                t0_a: self.t0,
                dt_a: self.dt,
                t0_b: other.t0,
                dt_b: other.dt,
            })
        }
    }

    pub fn path_length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Euclidean distance between the two trajectories' waypoints at `k`.
pub fn traj_point_distance(a: &Trajectory, b: &Trajectory, k: usize) -> Result<f64> {
    a.check_time_base(b)?;
    let len = a.len().min(b.len());
    if k >= len {
        return Err(Error::IndexOutOfRange { index: k, len });
    }
    Ok(a.points[k].distance(b.points[k]))
}

/// Time-averaged pointwise Euclidean distance. A pseudometric on
/// trajectories sharing a time base and length.
pub fn traj_metric(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    a.check_time_base(b)?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(traj_metric_unchecked(a.points(), b.points()))
}

pub(crate) fn traj_metric_unchecked(a: &[Vec2], b: &[Vec2]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(p, q)| p.distance(*q)).sum();
    sum / a.len() as f64
}

/// Minimum pointwise distance and the earliest index attaining it, over the
/// common prefix of the two trajectories.
pub fn min_separation(a: &Trajectory, b: &Trajectory) -> Result<(f64, usize)> {
    a.check_time_base(b)?;
    let len = a.len().min(b.len());
    if len == 0 {
        return Err(Error::EmptyTrajectory);
    }
    let mut best = (f64::INFINITY, 0);
    for k in 0..len {
        let d = a.points[k].distance(b.points[k]);
        if d < best.0 {
            best = (d, k);
        }
    }
    Ok(best)
}
