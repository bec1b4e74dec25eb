mod common;

use std::sync::Arc;

use crowdnav::agent::{Pedestrian, RobotState};
use crowdnav::crowdsim::WorldState;
use crowdnav::flowfield::*;
use crowdnav::geom::{Rect, Vec2};
use crowdnav::map::StaticMap;
use proptest::prelude::*;
use rand::Rng;

fn walker(id: u32, pos: Vec2, vel: Vec2) -> Pedestrian {
    let speed = vel.norm();
    let goal = pos + vel.normalized().unwrap_or(Vec2::new(1.0, 0.0)) * 100.0;
    Pedestrian::new(id, pos, goal, speed.max(1e-3)).with_velocity(vel)
}

fn box_map(w: f64, h: f64) -> StaticMap {
    StaticMap::open(Rect::new(Vec2::new(0.0, 0.0), Vec2::new(w, h)))
}

#[test]
fn single_pedestrian_density_at_its_position() {
    for r in [0.5, 1.0, 1.7] {
        let p = walker(0, Vec2::new(2.3, -1.1), Vec2::new(1.0, 0.0));
        let q = p.pos;
        let d = estimate_density(&[p], q, r).unwrap();
        assert!((d - 1.0 / (std::f64::consts::PI * r * r)).abs() < 1e-9);
    }
}

#[test]
fn closed_box_conserves_mass() {
    let mut rng = common::rng(8);
    let peds: Vec<Pedestrian> = (0..40)
        .map(|k| {
            let pos = Vec2::new(rng.random_range(2.0..10.0), rng.random_range(2.0..8.0));
            let vel = Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            walker(k, pos, vel)
        })
        .collect();
    let grid = Arc::new(FlowGrid::from_map(&box_map(12.0, 10.0), 0.5).unwrap());
    let mut s = FlowSnapshot::from_pedestrians(&peds, grid, 0.0, FlowParams::default()).unwrap();
    let m0 = s.total_mass();
    for _ in 0..100 {
        let before = s.total_mass();
        let dt = 0.9 * s.max_stable_dt().min(0.1);
        s = propagate(&s, dt).unwrap();
        assert!((s.total_mass() - before).abs() <= 1e-6 * before);
        assert!(s.densities().iter().all(|r| *r >= 0.0));
    }
    assert!((s.total_mass() - m0).abs() / m0 < 1e-4);
}

#[test]
fn uniform_stream_in_periodic_corridor_is_a_fixed_point() {
    let grid = Arc::new(FlowGrid::periodic(Rect::new(Vec2::new(0.0, 0.0), Vec2::new(20.0, 4.0)), 0.5).unwrap());
    let s0 = FlowSnapshot::uniform(grid, 0.8, Vec2::new(1.1, 0.0), FlowParams::default()).unwrap();
    let mut s = s0.clone();
    for _ in 0..20 {
        s = propagate(&s, 0.1).unwrap();
    }
    assert_eq!(s.densities(), s0.densities());
    assert_eq!(s.velocities(), s0.velocities());
}

#[test]
fn bump_centroid_advects_with_the_flow() {
    let grid = Arc::new(FlowGrid::periodic(Rect::new(Vec2::new(0.0, 0.0), Vec2::new(20.0, 10.0)), 0.5).unwrap());
    let params = FlowParams { forcing: false, ..FlowParams::default() };
    let (mut rho, mut vel) = (Vec::new(), Vec::new());
    for iy in 0..grid.ny() {
        for ix in 0..grid.nx() {
            let c = grid.center(ix, iy);
            rho.push((-(c - Vec2::new(8.0, 5.0)).norm_sq()).exp());
            vel.push(Vec2::new(1.0, 0.0));
        }
    }
    let s = FlowSnapshot::new(grid, 0.0, rho, vel.clone(), vel, params).unwrap();
    let dt = 0.2;
    let moved = propagate(&s, dt).unwrap().centroid() - s.centroid();
    assert!((moved.x - dt).abs() < 0.02 * dt, "centroid moved {moved:?}");
    assert!(moved.y.abs() < 1e-9);
}

#[test]
fn stationary_crowd_without_forcing_stays_put() {
    let peds: Vec<Pedestrian> = (0..6).map(|k| walker(k, Vec2::new(2.0 + k as f64, 3.0), Vec2::ZERO)).collect();
    let params = FlowParams { forcing: false, ..FlowParams::default() };
    let fm = build_flowmap(&peds, &box_map(10.0, 6.0), 3.0, 0.0, params).unwrap();
    let first = &fm.snapshots()[0];
    for s in fm.snapshots() {
        assert_eq!(s.densities(), first.densities());
    }
    let empty = build_flowmap(&[], &box_map(10.0, 6.0), 3.0, 0.0, FlowParams::default()).unwrap();
    assert!(empty.snapshots().iter().all(|s| s.total_mass() == 0.0));
}

/// Marginal density along x, normalised to unit sum, in bins of `bin` m.
fn marginal(values: impl Iterator<Item = (f64, f64)>, len: f64, bin: f64) -> Vec<f64> {
    let mut h = vec![0.0; (len / bin).round() as usize];
    for (x, w) in values {
        let k = ((x / bin) as usize).min(h.len() - 1);
        h[k] += w;
    }
    let total: f64 = h.iter().sum();
    h.iter().map(|v| v / total).collect()
}

#[test]
fn corridor_stream_matches_particle_histogram() {
    let (len, width) = (30.0, 4.0);
    let mut rng = common::rng(21);
    // a moderate stream on a jittered lattice, about 0.5 person/m^2
    let peds: Vec<Pedestrian> = (0..24)
        .map(|k| {
            let base = Vec2::new(2.0 + 1.6 * (k / 3) as f64, 0.7 + 1.3 * (k % 3) as f64);
            let pos = base + Vec2::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
            walker(k, pos, Vec2::new(1.2, 0.0))
        })
        .collect();
    let horizon = 6.0;
    let map = box_map(len, width);
    let fm = build_flowmap(&peds, &map, horizon, 0.0, FlowParams::default()).unwrap();
    let last = fm.snapshots().last().unwrap();
    let g = last.grid();
    let field = (0..g.ny()).flat_map(|iy| (0..g.nx()).map(move |ix| (ix, iy))).map(|(ix, iy)| {
        (g.center(ix, iy).x, last.density(ix, iy))
    });
    let ours = marginal(field, len, 1.0);
    // particle oracle: the same walkers run through the crowd simulator
    let robot = RobotState::at_rest(Vec2::new(len - 0.5, 0.5), 0.0);
    let mut world = WorldState::custom(map.clone(), peds.clone(), robot, robot.pos, 3);
    for _ in 0..(horizon / 0.05).round() as usize {
        world.step_mut(0.05, false);
    }
    let moved = world.peds.clone();
    let oracle_field = (0..g.ny()).flat_map(|iy| (0..g.nx()).map(move |ix| (ix, iy))).map(|(ix, iy)| {
        let c = g.center(ix, iy);
        (c.x, estimate_density(&moved, c, 1.0).unwrap())
    });
    let oracle = marginal(oracle_field, len, 1.0);
    let l1: f64 = ours.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).sum();
    assert!(l1 < 0.3, "L1 distance {l1}");
    // downstream cells gained density
    let downstream = |s: &FlowSnapshot| -> f64 {
        (0..g.ny()).flat_map(|iy| (0..g.nx()).map(move |ix| (ix, iy)))
            .filter(|&(ix, _)| g.center(ix, 0).x > 12.0)
            .map(|(ix, iy)| s.density(ix, iy))
            .sum()
    };
    assert!(downstream(last) > downstream(&fm.snapshots()[0]) + 1.0);
}

fn brute_query(fm: &FlowMap, q: Vec2, t: f64) -> (f64, Vec2) {
    let snaps = fm.snapshots();
    let g = snaps[0].grid();
    let at = |s: &FlowSnapshot| {
        let fx = ((q.x - g.bounds().min.x) / g.h() - 0.5).max(0.0).min((g.nx() - 1) as f64);
        let fy = ((q.y - g.bounds().min.y) / g.h() - 0.5).max(0.0).min((g.ny() - 1) as f64);
        let (x0, y0) = ((fx.floor() as usize).min(g.nx() - 2), (fy.floor() as usize).min(g.ny() - 2));
        let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
        let mut r = 0.0;
        let mut v = Vec2::ZERO;
        for (dx, wx) in [(0, 1.0 - ax), (1, ax)] {
            for (dy, wy) in [(0, 1.0 - ay), (1, ay)] {
                r += wx * wy * s.density(x0 + dx, y0 + dy);
                v += s.velocity(x0 + dx, y0 + dy) * (wx * wy);
            }
        }
        (r, v)
    };
    let u = (t - fm.start_time()) / fm.dt_flow();
    let k = (u.floor() as usize).min(snaps.len() - 2);
    let a = u - k as f64;
    let (r0, v0) = at(&snaps[k]);
    let (r1, v1) = at(&snaps[k + 1]);
    (r0 * (1.0 - a) + r1 * a, v0 * (1.0 - a) + v1 * a)
}

#[test]
fn queries_match_independent_interpolation() {
    let mut rng = common::rng(4);
    let peds: Vec<Pedestrian> = (0..25)
        .map(|k| walker(k, Vec2::new(rng.random_range(1.0..11.0), rng.random_range(1.0..7.0)), Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let fm = build_flowmap(&peds, &box_map(12.0, 8.0), 4.0, 2.0, FlowParams::default()).unwrap();
    for _ in 0..500 {
        let q = Vec2::new(rng.random_range(0.0..12.0), rng.random_range(0.0..8.0));
        let t = rng.random_range(2.0..6.0);
        let (r, v) = flux_query(&fm, q, t).unwrap();
        let (ro, vo) = brute_query(&fm, q, t);
        assert!((r - ro).abs() < 1e-12 && (v - vo).norm() < 1e-12);
    }
    let s0 = &fm.snapshots()[0];
    let node = s0.grid().center(5, 7);
    assert!((flux_query(&fm, node, 2.0).unwrap().0 - s0.density(5, 7)).abs() < 1e-15);
    assert!(flux_query(&fm, Vec2::new(13.0, 1.0), 3.0).is_err());
    assert!(flux_query(&fm, Vec2::new(3.0, 1.0), 6.5).is_err());
}

proptest! {
    #[test]
    fn kernel_estimate_is_additive(
        a in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..8),
        b in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..8),
        q in (-6.0f64..6.0, -6.0f64..6.0),
    ) {
        let mk = |v: &[(f64, f64)], off: u32| -> Vec<Pedestrian> {
            v.iter().enumerate().map(|(k, &(x, y))| walker(off + k as u32, Vec2::new(x, y), Vec2::new(1.0, 0.0))).collect()
        };
        let (pa, pb) = (mk(&a, 0), mk(&b, 100));
        let all: Vec<Pedestrian> = pa.iter().chain(&pb).cloned().collect();
        let q = Vec2::new(q.0, q.1);
        let sum = estimate_density(&pa, q, 1.0).unwrap() + estimate_density(&pb, q, 1.0).unwrap();
        prop_assert!((estimate_density(&all, q, 1.0).unwrap() - sum).abs() <= 1e-15 * (1.0 + sum));
    }

    #[test]
    fn flux_query_is_continuous(x in 0.5f64..11.5, y in 0.5f64..7.5, t in 0.0f64..3.9) {
        let peds: Vec<Pedestrian> = (0..10).map(|k| walker(k, Vec2::new(1.0 + k as f64, 2.0 + (k % 3) as f64), Vec2::new(0.8, 0.1))).collect();
        let fm = build_flowmap(&peds, &box_map(12.0, 8.0), 4.0, 0.0, FlowParams::default()).unwrap();
        let (a, _) = fm.query(Vec2::new(x, y), t).unwrap();
        let (b, _) = fm.query(Vec2::new(x + 1e-6, y - 1e-6), t + 1e-6).unwrap();
        prop_assert!((a - b).abs() < 1e-3);
    }
}
