use crowdnav::crowdsim::{Direction, ScenarioConfig, ScenarioKind};
use crowdnav::error::Error;
use crowdnav::geom::{Rect, Vec2};
use crowdnav::harness::ablation::AblationKind;
use crowdnav::harness::*;
use crowdnav::map::StaticMap;
use crowdnav::planner::PlannerConfig;

const DT: f64 = 0.05;

fn meta(time_limit: f64) -> EpisodeMeta {
    EpisodeMeta {
        scenario: ScenarioConfig::default(),
        planner: PlannerConfig::default(),
        seed: 0,
        map: StaticMap::open(Rect::new(Vec2::new(-50.0, -10.0), Vec2::new(50.0, 10.0))),
        goal: Vec2::new(45.0, 0.0),
        robot_heading: 0.0,
        dt: DT,
        time_limit,
        goal_tolerance: 0.5,
    }
}

/// A log of `n + 1` frames ending in a timeout, with agent states given by
/// `robot(t)` and `peds(t)`.
fn synthetic(n: usize, robot: impl Fn(f64) -> AgentSample, peds: impl Fn(f64) -> Vec<(u32, AgentSample)>) -> EpisodeLog {
    let mut frames = Vec::new();
    let mut t = 0.0;
    for k in 0..=n {
        if k > 0 {
            t += DT;
        }
        frames.push(Frame { t, robot: robot(t), peds: peds(t) });
    }
    EpisodeLog { meta: meta(t), frames, cycles: Vec::new() }
}

fn cruising(v: f64) -> impl Fn(f64) -> AgentSample {
    move |t| AgentSample { pos: Vec2::new(-20.0 + v * t, 0.0), vel: Vec2::new(v, 0.0) }
}

fn oncoming(lateral: f64) -> impl Fn(f64) -> Vec<(u32, AgentSample)> {
    move |t| vec![(3, AgentSample { pos: Vec2::new(-10.0 - t, lateral), vel: Vec2::new(-1.0, 0.0) })]
}

fn short_limits(t: f64) -> EpisodeLimits {
    EpisodeLimits { time_limit: Some(t), ..Default::default() }
}

#[test]
fn nearly_empty_corridor_succeeds() {
    let mut s = ScenarioConfig::new(ScenarioKind::NC, Direction::DT, 1, 3);
    s.corridor_length = 14.0;
    let ep = run_episode(&s, &PlannerConfig::default(), EpisodeLimits::default()).unwrap();
    assert!(ep.metrics.success, "{:?}", ep.metrics);
    assert!(!ep.metrics.collision);
    assert_eq!(ep.metrics.freezing_count, 0);
    assert_eq!(ep.metrics.complete_ratio, 100.0);
}

#[test]
fn episodes_are_deterministic() {
    let s = ScenarioConfig::new(ScenarioKind::NC, Direction::UT, 10, 21);
    let a = run_episode(&s, &PlannerConfig::default(), short_limits(8.0)).unwrap();
    let b = run_episode(&s, &PlannerConfig::default(), short_limits(8.0)).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.log.frames, b.log.frames);
}

#[test]
fn forced_timeout_on_long_course() {
    let mut s = ScenarioConfig::new(ScenarioKind::NC, Direction::DT, 1, 1);
    s.corridor_length = 104.0;
    let ep = run_episode(&s, &PlannerConfig::default(), short_limits(1.0)).unwrap();
    assert!(ep.metrics.timeout && !ep.metrics.success && !ep.metrics.collision);
    assert!(ep.metrics.complete_ratio < 10.0, "{}", ep.metrics.complete_ratio);
    assert!((ep.metrics.execute_time - 1.0).abs() < 1e-9);
}

#[test]
fn default_limit_is_three_traversals() {
    let s = ScenarioConfig::new(ScenarioKind::NC, Direction::DT, 1, 1);
    let runner = EpisodeRunner::new(&s, &PlannerConfig::default(), EpisodeLimits::default()).unwrap();
    let want = 3.0 * (s.corridor_length - 4.0) / PlannerConfig::default().v_max;
    assert!((runner.meta().time_limit - want).abs() < 1e-12);
}

#[test]
fn five_second_stop_is_one_freeze() {
    let log = synthetic(
        200,
        |t| {
            let v = if (2.0..7.0).contains(&t) { 0.0 } else { 1.0 };
            AgentSample { pos: Vec2::new(t, 0.0), vel: Vec2::new(v, 0.0) }
        },
        |_| vec![],
    );
    assert_eq!(compute_metrics(&log).unwrap().freezing_count, 1);
    let brief = synthetic(
        200,
        |t| {
            let v = if (2.0..4.0).contains(&t) { 0.0 } else { 1.0 };
            AgentSample { pos: Vec2::new(t, 0.0), vel: Vec2::new(v, 0.0) }
        },
        |_| vec![],
    );
    assert_eq!(compute_metrics(&brief).unwrap().freezing_count, 0);
}

#[test]
fn frontal_range_is_one_and_a_half_metres() {
    let close = synthetic(400, cruising(1.0), oncoming(1.0));
    let m = compute_metrics(&close).unwrap();
    assert_eq!(m.frontal_interactions, 1);
    assert!(!m.collision);
    let wide = synthetic(400, cruising(1.0), oncoming(2.0));
    assert_eq!(compute_metrics(&wide).unwrap().frontal_interactions, 0);
}

#[test]
fn pedestrian_walking_away_is_not_frontal() {
    let log = synthetic(200, cruising(1.0), |t| {
        vec![(1, AgentSample { pos: Vec2::new(-19.0 + 1.2 * t, 0.5), vel: Vec2::new(1.2, 0.0) })]
    });
    assert_eq!(compute_metrics(&log).unwrap().frontal_interactions, 0);
}

#[test]
fn constant_velocity_has_zero_jerk() {
    let log = synthetic(100, |t| AgentSample { pos: Vec2::new(0.5 * t, 0.25 * t), vel: Vec2::new(0.5, 0.25) }, |_| vec![]);
    assert!(compute_metrics(&log).unwrap().jerk < 1e-6);
}

#[test]
fn density_counts_strip_occupancy() {
    // one pedestrian held 0.8 m straight ahead for the whole run
    let log = synthetic(100, cruising(1.0), |t| {
        vec![(1, AgentSample { pos: Vec2::new(-19.2 + t, 0.0), vel: Vec2::new(1.0, 0.0) })]
    });
    let m = compute_metrics(&log).unwrap();
    let want = 100.0 * DT / (0.5 * 0.8);
    assert!((m.cumulative_density - want).abs() < 1e-9, "{}", m.cumulative_density);
}

#[test]
fn contact_ends_episode_as_collision() {
    let mut log = synthetic(100, cruising(1.0), |t| vec![(1, AgentSample { pos: Vec2::new(-10.0 - t, 0.0), vel: Vec2::new(-1.0, 0.0) })]);
    let end = termination(&log);
    // the pedestrian walks through the robot long before the limit
    assert!(matches!(end, Err(Error::TruncatedLog(_))), "{end:?}");
    let hit = log.frames.iter().position(|f| f.robot.pos.distance(f.peds[0].1.pos) < COLLISION).unwrap();
    log.frames.truncate(hit + 1);
    let m = compute_metrics(&log).unwrap();
    assert!(m.collision && !m.success && !m.timeout);
}

const COLLISION: f64 = crowdnav::harness::metrics::COLLISION_DISTANCE;

#[test]
fn truncated_logs_are_rejected() {
    let mut log = synthetic(100, cruising(1.0), |_| vec![]);
    log.frames.truncate(50);
    assert!(matches!(compute_metrics(&log), Err(Error::TruncatedLog(_))));
    log.frames.clear();
    assert!(matches!(compute_metrics(&log), Err(Error::TruncatedLog(_))));
    let mut gap = synthetic(100, cruising(1.0), |_| vec![]);
    gap.frames.remove(40);
    assert!(matches!(compute_metrics(&gap), Err(Error::TruncatedLog(_))));
    let bad = "t,agent,x,y,vx,vy\n0,robot,1,2\n";
    assert!(matches!(EpisodeLog::read_replay(meta(1.0), bad.as_bytes()), Err(Error::TruncatedLog(_))));
}

#[test]
fn replay_files_round_trip() {
    let s = ScenarioConfig::new(ScenarioKind::NC, Direction::UT, 8, 4);
    let ep = run_episode(&s, &PlannerConfig::default(), short_limits(5.0)).unwrap();
    let mut csv = Vec::new();
    ep.log.write_replay_csv(&mut csv).unwrap();
    let mut json = Vec::new();
    ep.log.write_meta_json(&mut json).unwrap();
    let meta: EpisodeMeta = serde_json::from_slice(&json).unwrap();
    let back = EpisodeLog::read_replay(meta, csv.as_slice()).unwrap();
    assert_eq!(back.frames, ep.log.frames);
    assert_eq!(back.meta, ep.log.meta);
    assert_eq!(compute_metrics(&back).unwrap(), ep.metrics);
}

fn small_suite() -> (Vec<SuiteCell>, Vec<u64>, SuiteOptions) {
    let s = ScenarioConfig::new(ScenarioKind::NC, Direction::UT, 8, 0);
    let cells = vec![
        SuiteCell::new(s.clone(), PlannerConfig::default(), "full"),
        SuiteCell::new(s, PlannerConfig::baseline(), "base"),
    ];
    let opts = SuiteOptions { limits: short_limits(4.0), keep_logs: true };
    (cells, seed_list(30, 3), opts)
}

#[test]
fn suite_counts_and_recount_oracle() {
    let (cells, seeds, opts) = small_suite();
    let res = run_suite(&cells, &seeds, opts).unwrap();
    assert_eq!(res.episodes.len(), 6);
    assert_eq!(res.aggregates.len(), 2);
    for (c, row) in res.aggregates.iter().enumerate() {
        let mine: Vec<&EpisodeRecord> = res.episodes.iter().filter(|e| e.cell == c).collect();
        let recount = |f: &dyn Fn(&MetricsRecord) -> bool| {
            100.0 * mine.iter().filter(|e| f(e.metrics.as_ref().unwrap())).count() as f64 / mine.len() as f64
        };
        assert!((row.success_rate - recount(&|m| m.success)).abs() < 1e-9);
        assert!((row.timeout_rate - recount(&|m| m.timeout)).abs() < 1e-9);
        assert!((row.collision_rate - recount(&|m| m.collision)).abs() < 1e-9);
        let frontal: u32 = mine.iter().map(|e| e.metrics.unwrap().frontal_interactions).sum();
        assert_eq!(row.frontal_num, frontal);
        for rate in [row.success_rate, row.timeout_rate, row.collision_rate, row.complete_ratio] {
            assert!((0.0..=100.0).contains(&rate));
        }
    }
    // aggregates are a pure function of the logs
    let rescored: Vec<EpisodeRecord> = res
        .episodes
        .iter()
        .map(|e| EpisodeRecord {
            cell: e.cell,
            seed: e.seed,
            metrics: Some(compute_metrics(e.log.as_ref().unwrap()).unwrap()),
            error: None,
            log: None,
        })
        .collect();
    assert_eq!(aggregate(&cells, &rescored), res.aggregates);
    let again = run_suite(&cells, &seeds, opts).unwrap();
    assert_eq!(again.aggregates, res.aggregates);
}

#[test]
fn suite_writes_tables_and_replays() {
    let (cells, seeds, opts) = small_suite();
    let res = run_suite(&cells, &seeds[..1], opts).unwrap();
    let mut metrics = Vec::new();
    res.write_metrics_csv(&mut metrics).unwrap();
    assert_eq!(String::from_utf8(metrics).unwrap().lines().count(), 3);
    let mut agg = Vec::new();
    res.write_aggregate_csv(&mut agg).unwrap();
    let agg = String::from_utf8(agg).unwrap();
    assert_eq!(agg.lines().next().unwrap(), AggregateRow::HEADER);
    let dir = tempfile::tempdir().unwrap();
    res.write_replays(dir.path()).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 4);
}

#[test]
fn failed_episodes_are_recorded_not_fatal() {
    let mut bad = ScenarioConfig::new(ScenarioKind::NC, Direction::DT, 2000, 0);
    bad.corridor_length = 10.0;
    let cells = vec![
        SuiteCell::new(bad, PlannerConfig::default(), "packed"),
        SuiteCell::new(ScenarioConfig::new(ScenarioKind::NC, Direction::DT, 2, 0), PlannerConfig::default(), "ok"),
    ];
    let res = run_suite(&cells, &[1], SuiteOptions { limits: short_limits(1.0), keep_logs: false }).unwrap();
    assert!(res.episodes[0].error.is_some());
    assert_eq!(res.aggregates[0].failures, 1);
    assert!(res.episodes[1].metrics.is_some());
}

#[test]
fn ablation_grids_and_rows() {
    assert_eq!(AblationKind::Speed.default_grid(), vec![1.0, 1.25, 1.5, 1.75, 2.0, 2.25]);
    assert_eq!(AblationKind::Ratio.default_grid().len(), 9);
    assert_eq!(AblationKind::Horizon.default_grid(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    let base = PlannerConfig::default();
    let off = AblationKind::Horizon.apply(&base, 0.0);
    assert!(!off.idp_enabled);
    let r = AblationKind::Ratio.apply(&base, 3.0);
    assert_eq!((r.w_idp, r.w_fdp), (3.0, 1.0));

    let s = ScenarioConfig::new(ScenarioKind::NC, Direction::UT, 6, 0);
    let opts = SuiteOptions { limits: short_limits(1.0), keep_logs: false };
    let rows = run_ablation(AblationKind::Ratio, &AblationKind::Ratio.default_grid(), &[s.clone()], &base, &[2], opts).unwrap();
    assert_eq!(rows.len(), 9);
    let h = run_ablation(AblationKind::Horizon, &[0.0], &[s], &base, &[2], opts).unwrap();
    assert_eq!(h[0].aggregate.failures, 0);
    assert!(run_ablation(AblationKind::Speed, &[], &[], &base, &[2], opts).is_err());
}
