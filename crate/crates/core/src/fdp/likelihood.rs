//! Flow-disturbance likelihood of one trajectory segment.

use crate::error::{invalid, Result};
use crate::flowfield::FlowMap;
use crate::geom::Vec2;

use super::gp::GpState;

/// Polar quadrature nodes over a disc of `radius` centred at the origin:
/// `n` rings at `r_k = (k + 1/2) R / n` times `n` spokes, with weights
/// `r_k * dr * 2 pi / n` summing to the disc area.
pub fn disc_quadrature(radius: f64, n: usize) -> Result<Vec<(Vec2, f64)>> {
    if n == 0 || !(radius > 0.0) {
        return Err(invalid("quadrature needs a positive radius and at least one node"));
    }
    let dr = radius / n as f64;
    let dth = std::f64::consts::TAU / n as f64;
    let mut nodes = Vec::with_capacity(n * n);
    for k in 0..n {
        let r = (k as f64 + 0.5) * dr;
        for j in 0..n {
            let th = (j as f64 + 0.5) * dth;
            nodes.push((Vec2::from_angle(th) * r, r * dr * dth));
        }
    }
    Ok(nodes)
}

/// Disturbance accumulated between two states `dt` apart, starting at
/// absolute time `t_prev`: the time integral (midpoint rule) of the density
/// weighted relative speed `rho(q) |v_robot - v(q)|` over the disc around
/// the robot. Points outside the flow grid count as empty; times are clamped
/// to the flow map.
pub fn flow_likelihood_at(
    prev: &GpState,
    cur: &GpState,
    t_prev: f64,
    dt: f64,
    fm: &FlowMap,
    nodes: &[(Vec2, f64)],
) -> f64 {
    let c = (prev.pos + cur.pos) * 0.5;
    let v = (prev.vel + cur.vel) * 0.5;
    let t = (t_prev + 0.5 * dt).clamp(fm.start_time(), fm.end_time());
    let mut acc = 0.0;
    for &(off, w) in nodes {
        let (rho, vf) = fm.query_or_zero(c + off, t);
        if rho > 0.0 {
            acc += w * rho * (v - vf).norm();
        }
    }
    acc * dt
}

/// [`flow_likelihood_at`] with its own quadrature of `quad_n x quad_n`
/// nodes over a disc of `radius`.
pub fn flow_likelihood(
    prev: &GpState,
    cur: &GpState,
    t_prev: f64,
    dt: f64,
    fm: &FlowMap,
    radius: f64,
    quad_n: usize,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(invalid("segment duration must be positive"));
    }
    let nodes = disc_quadrature(radius, quad_n)?;
    Ok(flow_likelihood_at(prev, cur, t_prev, dt, fm, &nodes))
}
