use std::process::Command;

fn crowdnav() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdnav"))
}

#[test]
fn run_then_replay_reproduces_the_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let st = crowdnav()
        .args(["run", "--seed", "5", "--time-limit", "3", "--emit", "csv", "--emit", "replay", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    for f in ["metrics.csv", "aggregate.csv", "replay/0_5.csv", "plotdata/flowfield.csv", "plotdata/triangulation.csv", "plotdata/chosen_paths.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let again = dir.path().join("again");
    let st = crowdnav().arg("replay").arg(out.join("replay")).arg("--out").arg(&again).status().unwrap();
    assert!(st.success());
    let a = std::fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let b = std::fs::read_to_string(again.join("aggregate.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn configuration_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "kind = NC\nped_count = 0\n").unwrap();
    let st = crowdnav().args(["suite", "--repeats", "1", "--scenario"]).arg(&bad).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let unknown = dir.path().join("unknown.cfg");
    std::fs::write(&unknown, "w_idp = 2\nwarp_drive = 1\n").unwrap();
    let st = crowdnav().args(["run", "--planner"]).arg(&unknown).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = crowdnav().args(["suite", "--repeats", "0", "--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn small_suite_writes_one_row_per_episode() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("nc.cfg");
    std::fs::write(&scen, "kind = NC\ndirection = DT\nped_count = 6\n").unwrap();
    let st = crowdnav()
        .args(["suite", "--repeats", "2", "--time-limit", "2", "--emit", "csv", "--emit", "json", "--scenario"])
        .arg(&scen)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 2 * 2);
    let agg = std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 2);
    assert!(dir.path().join("aggregate.json").exists());
}
