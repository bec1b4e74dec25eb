mod common;

use crowdnav::agent::{Pedestrian, RobotState};
use crowdnav::crowdsim::WorldState;
use crowdnav::fdp::{triangulate, TriangulateOptions};
use crowdnav::geom::{Rect, Vec2};
use crowdnav::map::StaticMap;
use crowdnav::planner::*;
use crowdnav::traj::Trajectory;
use crowdnav::Rng;
use proptest::prelude::*;

fn open(w: f64, h: f64) -> StaticMap {
    StaticMap::open(Rect::new(Vec2::new(0.0, 0.0), Vec2::new(w, h)))
}

fn ped(id: u32, pos: Vec2, vel: Vec2) -> Pedestrian {
    let dir = vel.normalized().unwrap_or(Vec2::new(1.0, 0.0));
    Pedestrian::new(id, pos, pos + dir * 50.0, vel.norm().max(0.1)).with_velocity(vel)
}

/// Straightforward re-integration: midpoint heading and speed per 0.05 s.
fn reintegrate(start: RobotState, controls: &[Control], v_max: f64) -> Vec<Vec2> {
    let (mut x, mut y, mut th, mut v) = (start.pos.x, start.pos.y, start.heading, start.speed);
    let mut out = Vec::new();
    for (k, u) in controls.iter().enumerate() {
        let v1 = (v + u.accel * 0.05).max(0.0).min(v_max);
        let thm = th + u.omega * 0.025;
        x += 0.5 * (v + v1) * thm.cos() * 0.05;
        y += 0.5 * (v + v1) * thm.sin() * 0.05;
        th += u.omega * 0.05;
        v = v1;
        if (k + 1) % 5 == 0 {
            out.push(Vec2::new(x, y));
        }
    }
    out
}

fn fan_scene() -> (StaticMap, Vec<Pedestrian>, RobotState) {
    let map = open(30.0, 30.0);
    let c = Vec2::new(15.0, 15.0);
    let peds = [(3.0, 0.2), (-0.3, 3.0), (-3.0, -0.2), (0.2, -3.0)]
        .iter()
        .enumerate()
        .map(|(k, &(dx, dy))| ped(k as u32, c + Vec2::new(dx, dy), Vec2::ZERO))
        .collect();
    (map, peds, RobotState::new(c, 0.3, 0.8, 0.0))
}

#[test]
fn sampled_candidates_are_kinematically_consistent() {
    let (map, peds, state) = fan_scene();
    let cfg = PlannerConfig::default();
    let g = triangulate(&peds, &map, &[state.pos, Vec2::new(28.0, 15.0)], &TriangulateOptions::default()).unwrap();
    let ctg = CostToGo::new(&map, Vec2::new(28.0, 15.0), 0.25).unwrap();
    let mut rng = Rng::new(5);
    let set = sample_candidates(&state, Some((&g, g.anchor_vertex(0).unwrap())), &ctg, &cfg, &mut rng).unwrap();
    assert_eq!(set.primitives.len(), cfg.k);
    for p in &set.primitives {
        for u in &p.controls {
            assert!(u.accel.abs() <= cfg.a_max && u.omega.abs() <= cfg.omega_max);
        }
        let oracle = reintegrate(state, &p.controls, cfg.v_max);
        assert_eq!(oracle.len(), p.trajectory.len());
        for (a, b) in oracle.iter().zip(p.trajectory.points()) {
            assert!(a.distance(*b) < 1e-9);
        }
    }
    // stop primitive first
    assert!(set.primitives[0].stops());
}

#[test]
fn each_face_gets_its_share_or_is_reported() {
    let (map, peds, state) = fan_scene();
    let cfg = PlannerConfig { k: 12, ..Default::default() };
    let g = triangulate(&peds, &map, &[state.pos, Vec2::new(28.0, 15.0)], &TriangulateOptions::default()).unwrap();
    let v = g.anchor_vertex(0).unwrap();
    assert_eq!(g.faces_around(v).len(), 4);
    let ctg = CostToGo::new(&map, Vec2::new(28.0, 15.0), 0.25).unwrap();
    for seed in 0..10 {
        let set = sample_candidates(&state, Some((&g, v)), &ctg, &cfg, &mut Rng::new(seed)).unwrap();
        for j in 0..4 {
            let count = set.face_of.iter().filter(|f| **f == Some(j)).count();
            assert!(count >= 2 || set.underfilled.contains(&j), "face {j}: {count}");
        }
    }
}

#[test]
fn resting_robot_in_clear_space_is_safe() {
    let map = open(10.0, 10.0);
    let cfg = PlannerConfig::default();
    let s = RobotState::at_rest(Vec2::new(5.0, 5.0), 0.0);
    let stop = MotionPrimitive::stop(s, cfg.a_max, cfg.horizon, cfg.v_max).unwrap();
    let far = ped(0, Vec2::new(8.5, 8.5), Vec2::ZERO);
    assert!(passive_safety_check(&stop, &[far], &map, &cfg));
}

#[test]
fn head_on_closing_fast_is_unsafe() {
    let map = open(20.0, 10.0);
    let cfg = PlannerConfig::default();
    let s = RobotState::new(Vec2::new(2.0, 5.0), 0.0, 1.2, 0.0);
    let p = MotionPrimitive::constant(s, Control::new(0.0, 0.0), 4.0, cfg.v_max).unwrap();
    // safe zone ends at x = 4.4 after 2 s; the pedestrian is 0.5 m past it then
    let closing = 3.0 - 1.2;
    let ped_at_2s = Vec2::new(4.4 + 0.5 + 0.65, 5.0);
    let walker = ped(0, ped_at_2s + Vec2::new(closing * 2.0, 0.0), Vec2::new(-closing, 0.0));
    assert!(!passive_safety_check(&p, &[walker], &map, &cfg));
}

#[test]
fn conflict_in_negotiable_zone_only_is_acceptable() {
    let map = open(20.0, 10.0);
    let cfg = PlannerConfig::default();
    let s = RobotState::new(Vec2::new(2.0, 5.0), 0.0, 0.6, 0.0);
    let p = MotionPrimitive::constant(s, Control::new(0.0, 0.0), 4.0, cfg.v_max).unwrap();
    // a standing pedestrian on the path 3.0 m ahead of the start: the robot
    // reaches it after the safe half, and can brake before it
    let standing = ped(0, Vec2::new(2.0 + 0.6 * 3.5, 5.0), Vec2::ZERO);
    assert!(sweep_collides(&p.states, &[standing.clone()], 0.0, safety_clearance(&cfg), &map));
    assert!(passive_safety_check(&p, &[standing], &map, &cfg));
}

fn cand(id: usize, idp: f64, fdp: f64) -> Candidate {
    let s = RobotState::at_rest(Vec2::ZERO, 0.0);
    let mut c = Candidate::new(id, None, MotionPrimitive::stop(s, 1.5, 1.0, 1.2).unwrap());
    c.safe = true;
    c.idp = idp;
    c.fdp = fdp;
    c
}

#[test]
fn consistency_merge_rules() {
    let cfg = PlannerConfig::default();
    let fresh = vec![cand(0, 0.0, 0.0), cand(1, 0.0, 0.0)];
    assert_eq!(consistency_merge(None, fresh.clone(), &cfg), fresh);
    let mut old = cand(7, 0.0, 0.0);
    old.consistency_age = 7; // 0.85^8 < 0.3
    assert_eq!(consistency_merge(Some(old), fresh.clone(), &cfg).len(), 2);

    // reselect the carried candidate three cycles running
    let mut best = cand(0, 1.0, 1.0);
    for _ in 0..3 {
        let merged = consistency_merge(Some(best.clone()), vec![cand(0, 9.0, 9.0)], &cfg);
        let mut merged = merged;
        let i = score_and_select(&mut merged, &cfg, 1.0, 1.0).unwrap();
        assert!(merged[i].carried_over);
        best = merged[i].clone();
    }
    assert_eq!(best.consistency_age, 3);
    assert!((best.discount(&cfg) - 0.85f64.powi(3)).abs() < 1e-15);
}

#[test]
fn selection_prefers_lower_disturbance_and_respects_safety() {
    let cfg = PlannerConfig::default();
    let mut one = vec![cand(0, 100.0, 100.0)];
    assert_eq!(score_and_select(&mut one, &cfg, 1.0, 1.0), Some(0));
    let mut two = vec![cand(0, 5.0, 0.0), cand(1, 0.0, 0.0)];
    assert_eq!(score_and_select(&mut two, &cfg, 1.0, 1.0), Some(1));
    let mut unsafe_cheap = vec![cand(0, 5.0, 5.0), cand(1, 0.0, 0.0)];
    unsafe_cheap[1].safe = false;
    assert_eq!(score_and_select(&mut unsafe_cheap, &cfg, 1.0, 1.0), Some(0));
    let mut none = vec![cand(0, 0.0, 0.0)];
    none[0].safe = false;
    assert_eq!(score_and_select(&mut none, &cfg, 1.0, 1.0), None);
}

proptest! {
    #[test]
    fn raising_a_penalty_never_improves_rank(
        costs in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0), 2..10),
        bump in 0.0f64..5.0,
        which in 0usize..10,
    ) {
        let cfg = PlannerConfig::default();
        let build = |extra: f64| -> Vec<Candidate> {
            costs.iter().enumerate().map(|(i, &(b, idp, fdp))| {
                let mut c = cand(i, idp + if i == which % costs.len() { extra } else { 0.0 }, fdp);
                c.base_cost = b;
                c
            }).collect()
        };
        let rank = |v: &mut Vec<Candidate>| -> usize {
            score_and_select(v, &cfg, 1.0, 1.0);
            let me = v[which % costs.len()].total;
            v.iter().filter(|c| c.total < me).count()
        };
        let before = rank(&mut build(0.0));
        let after = rank(&mut build(bump));
        prop_assert!(after >= before);
    }
}

#[test]
fn post_check_examples() {
    let t = |pts: Vec<Vec2>| Trajectory::new(0.25, 0.25, pts).unwrap();
    let robot = t((1..=16).map(|k| Vec2::new(k as f64 * 0.25, 0.0)).collect());
    let far = t((1..=16).map(|k| Vec2::new(k as f64 * 0.25, 2.5)).collect());
    assert!(post_collision_check(&robot, &[&far]));
    // unaware walker crossing the robot path at t = 2 s
    let crossing = t((1..=16).map(|k| Vec2::new(2.0, (k as f64 * 0.25 - 2.0) * 1.0)).collect());
    assert!(!post_collision_check(&robot, &[&crossing]));
    let stopped = t(vec![Vec2::ZERO; 16]);
    let passer = t((1..=16).map(|k| Vec2::new(-2.0 + k as f64 * 0.25, 1.0)).collect());
    assert!(post_collision_check(&stopped, &[&passer]));
}

#[test]
fn empty_world_heads_straight_for_goal() {
    let map = open(30.0, 10.0);
    let robot = RobotState::at_rest(Vec2::new(3.0, 5.0), 0.0);
    let goal = Vec2::new(27.0, 5.0);
    let world = WorldState::custom(map, vec![], robot, goal, 1);
    let out = plan_step(&world, goal, &PlannerConfig::default(), &Rng::new(3)).unwrap();
    assert!(!out.freeze);
    let end = out.chosen.primitive.end_state.pos;
    let err = (end - robot.pos).angle_between(goal - robot.pos).to_degrees();
    assert!(err < 5.0, "heading error {err} deg");
}

#[test]
fn plan_step_is_deterministic() {
    let map = open(20.0, 8.0);
    let mut r = common::rng(2);
    use rand::Rng as _;
    let peds: Vec<Pedestrian> = (0..20)
        .map(|k| ped(k, Vec2::new(r.random_range(6.0..19.0), r.random_range(0.5..7.5)), Vec2::new(-r.random_range(0.5..1.3), 0.0)))
        .collect();
    let robot = RobotState::new(Vec2::new(2.0, 4.0), 0.0, 0.8, 0.0);
    let goal = Vec2::new(19.0, 4.0);
    let world = WorldState::custom(map, peds, robot, goal, 9);
    let cfg = PlannerConfig::default();
    let a = plan_step(&world, goal, &cfg, &Rng::new(11)).unwrap();
    let b = plan_step(&world, goal, &cfg, &Rng::new(11)).unwrap();
    assert_eq!(a.table, b.table);
    assert_eq!(a.chosen, b.chosen);
}

#[test]
fn closing_wall_of_pedestrians_freezes_the_robot() {
    let map = open(20.0, 4.0);
    let peds: Vec<Pedestrian> = (0..8).map(|k| ped(k, Vec2::new(3.7, 0.25 + 0.5 * k as f64), Vec2::new(-1.5, 0.0))).collect();
    // moving, so even full braking ends in contact
    let robot = RobotState::new(Vec2::new(2.0, 2.0), 0.0, 1.2, 0.0);
    let goal = Vec2::new(19.0, 2.0);
    let world = WorldState::custom(map, peds, robot, goal, 4);
    let out = plan_step(&world, goal, &PlannerConfig::default(), &Rng::new(1)).unwrap();
    assert!(out.freeze);
    assert!(out.chosen.primitive.stops());
    assert!(out.table.iter().all(|r| !r.chosen));
}

#[test]
fn tracking_examples() {
    let cfg = PlannerConfig::default();
    let s = RobotState::new(Vec2::new(1.0, 1.0), 0.4, 0.9, 0.0);
    let cv = MotionPrimitive::constant(s, Control::new(0.0, 0.0), 4.0, cfg.v_max).unwrap();
    let u = track(&cv, &s, 0.05, &cfg);
    assert!(u.accel.abs() < 1e-6 && u.omega.abs() < 1e-6);
    let left = Vec2::from_angle(0.4).perp();
    let off = RobotState { pos: s.pos - left * 0.2, ..s };
    assert!(track(&cv, &off, 0.05, &cfg).omega > 0.0);
    let off = RobotState { pos: s.pos + left * 0.2, ..s };
    assert!(track(&cv, &off, 0.05, &cfg).omega < 0.0);

    // closed-loop rollout of a curving, accelerating primitive from a perturbed start
    let p = MotionPrimitive::constant(s, Control::new(0.3, 0.4), 4.0, cfg.v_max).unwrap();
    let mut x = RobotState { pos: s.pos + Vec2::new(0.05, -0.05), ..s };
    while x.time < p.end_state.time - 1e-9 {
        let u = track(&p, &x, SUBSTEP, &cfg);
        x = step_unicycle(&x, u, SUBSTEP, cfg.v_max);
    }
    assert!(x.pos.distance(p.end_state.pos) < 0.15);
}
