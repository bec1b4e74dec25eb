mod common;

use crowdnav::geom::Vec2;
use crowdnav::traj::{min_separation, traj_metric, Trajectory};
use crowdnav::Rng;
use proptest::prelude::*;

#[test]
fn metric_is_a_pseudometric_on_random_triples() {
    let mut r = common::rng(99);
    for _ in 0..1000 {
        let (a, b, c) = (common::random_traj(&mut r, 16), common::random_traj(&mut r, 16), common::random_traj(&mut r, 16));
        let ab = traj_metric(&a, &b).unwrap();
        assert_eq!(ab, traj_metric(&b, &a).unwrap());
        assert!(ab <= traj_metric(&a, &c).unwrap() + traj_metric(&c, &b).unwrap() + 1e-9);
        assert_eq!(traj_metric(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn metric_matches_pointwise_mean() {
    let mut r = common::rng(7);
    for _ in 0..50 {
        let (a, b) = (common::random_traj(&mut r, 16), common::random_traj(&mut r, 16));
        let brute = a.points().iter().zip(b.points()).map(|(p, q)| ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()).sum::<f64>() / 16.0;
        assert!((traj_metric(&a, &b).unwrap() - brute).abs() < 1e-12);
    }
}

#[test]
fn crossing_lines_touch_at_index_five() {
    let a = Trajectory::new(0.0, 0.25, (0..12).map(|k| Vec2::new(k as f64 * 0.3, 0.0)).collect()).unwrap();
    let b = Trajectory::new(0.0, 0.25, (0..12).map(|k| Vec2::new(1.5, (k as f64 - 5.0) * 0.4)).collect()).unwrap();
    assert_eq!(min_separation(&a, &b).unwrap(), (0.0, 5));
}

#[test]
fn rng_replays_a_million_draws() {
    let (mut a, mut b) = (Rng::new(2024), Rng::new(2024));
    for _ in 0..1_000_000 {
        assert_eq!(a.next_u64(), b.next_u64());
    }
    assert_eq!(a.counter(), b.counter());
    let (mut x, mut y) = ([0u8; 4096], [0u8; 4096]);
    a.fill_bytes(&mut x);
    b.fill_bytes(&mut y);
    assert_eq!(x, y);
}

proptest! {
    #[test]
    fn resampling_to_the_same_step_is_identity(
        pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..40),
        t0 in -5.0f64..5.0,
        dt in 0.05f64..1.0,
    ) {
        let t = Trajectory::new(t0, dt, pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect()).unwrap();
        prop_assert_eq!(t.resample(dt).unwrap(), t);
    }

    #[test]
    fn forked_streams_are_reproducible(seed in any::<u64>(), key in any::<u64>()) {
        let root = Rng::new(seed);
        let (mut a, mut b) = (root.fork(key), root.fork(key));
        for _ in 0..64 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
