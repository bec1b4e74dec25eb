//! Command-line runner for episodes, suites, ablations and replays.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crowdnav::crowdsim::{parse_config_text, spawn, Direction, ScenarioConfig, ScenarioKind};
use crowdnav::error::{Error, Result};
use crowdnav::fdp::{triangulate, TriangulateOptions};
use crowdnav::flowfield::{build_flowmap, FlowParams};
use crowdnav::harness::ablation::AblationKind;
use crowdnav::harness::suite::DEFAULT_REPEATS;
use crowdnav::harness::*;
use crowdnav::planner::PlannerConfig;

#[derive(Parser)]
#[command(name = "crowdnav", version, about = "Disturbance-aware crowd navigation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Csv,
    Json,
    Replay,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (JSON or `key = value` lines); repeat for several.
    #[arg(long)]
    scenario: Vec<PathBuf>,
    /// Planner file (JSON or `key = value` lines); repeat for several.
    #[arg(long)]
    planner: Vec<PathBuf>,
    /// First seed; repeats use consecutive seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Output kinds; may be given several times.
    #[arg(long, value_enum, default_values_t = [Emit::Csv])]
    emit: Vec<Emit>,
    /// Episode limit in simulated seconds (default: three traversals).
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode and write its metrics, replay and plot data.
    Run {
        #[command(flatten)]
        common: Common,
        /// Keep every cycle's candidate cost table.
        #[arg(long)]
        tables: bool,
    },
    /// Run every scenario with every planner over a seed range.
    Suite {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_REPEATS)]
        repeats: usize,
    },
    /// Sweep one planner parameter.
    Ablation {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_REPEATS)]
        repeats: usize,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Comma-separated grid; defaults to the standard sweep.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    /// Recompute metrics and aggregates from replay files.
    Replay {
        /// A replay `.csv` (with its `.json` beside it) or a directory of them.
        path: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Speed,
    Horizon,
    Ratio,
}

impl From<Kind> for AblationKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Speed => AblationKind::Speed,
            Kind::Horizon => AblationKind::Horizon,
            Kind::Ratio => AblationKind::Ratio,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParameter(_) | Error::InfeasiblePacking(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { common, tables } => run(&common, tables),
        Command::Suite { common, repeats } => suite(&common, repeats),
        Command::Ablation { common, repeats, kind, grid } => ablation(&common, repeats, kind.into(), grid),
        Command::Replay { path, out } => replay(&path, &out),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn scenarios(c: &Common, fallback: Vec<ScenarioConfig>) -> Result<Vec<ScenarioConfig>> {
    if c.scenario.is_empty() {
        return Ok(fallback);
    }
    c.scenario.iter().map(|p| ScenarioConfig::parse(&read_text(p)?)).collect()
}

fn planners(c: &Common, with_baseline: bool) -> Result<Vec<(String, PlannerConfig)>> {
    if c.planner.is_empty() {
        let mut v = vec![("full".to_string(), PlannerConfig::default())];
        if with_baseline {
            v.push(("baseline".to_string(), PlannerConfig::baseline()));
        }
        return Ok(v);
    }
    c.planner
        .iter()
        .map(|p| {
            let cfg: PlannerConfig = parse_config_text(&read_text(p)?)?;
            cfg.validate()?;
            let label = p.file_stem().map_or("planner".into(), |s| s.to_string_lossy().into_owned());
            Ok((label, cfg))
        })
        .collect()
}

fn limits(c: &Common) -> Result<EpisodeLimits> {
    if let Some(t) = c.time_limit {
        if !(t > 0.0) {
            return Err(Error::Config("--time-limit must be positive".into()));
        }
    }
    Ok(EpisodeLimits { time_limit: c.time_limit, ..Default::default() })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// The six corridor, intersection and bottleneck configurations.
fn default_matrix() -> Vec<ScenarioConfig> {
    let mut v = Vec::new();
    for kind in [ScenarioKind::NC, ScenarioKind::FI, ScenarioKind::BA] {
        for dir in [Direction::DT, Direction::UT] {
            v.push(ScenarioConfig::new(kind, dir, 20, 0));
        }
    }
    v
}

fn run(c: &Common, tables: bool) -> Result<()> {
    let mut scenario = scenarios(c, vec![ScenarioConfig::new(ScenarioKind::NC, Direction::UT, 20, 0)])?.remove(0);
    scenario.seed = c.seed;
    let (label, planner) = planners(c, false)?.remove(0);
    let lim = EpisodeLimits { record_tables: tables, ..limits(c)? };
    let ep = run_episode(&scenario, &planner, lim)?;
    let cell = SuiteCell::new(scenario.clone(), planner, &label);
    let result = SuiteResult {
        cells: vec![cell],
        seeds: vec![c.seed],
        episodes: vec![EpisodeRecord { cell: 0, seed: c.seed, metrics: Some(ep.metrics), error: None, log: Some(ep.log) }],
        aggregates: Vec::new(),
    };
    let result = SuiteResult { aggregates: aggregate(&result.cells, &result.episodes), ..result };
    emit(&result, c)?;
    let log = result.episodes[0].log.as_ref().expect("kept");
    write_plotdata(&c.out.join("plotdata"), &scenario, &planner, log)?;
    let m = ep.metrics;
    println!(
        "{} seed {}: success {} collision {} timeout {} time {:.2}s frontal {} freezing {}",
        result.cells[0].label, c.seed, m.success, m.collision, m.timeout, m.execute_time, m.frontal_interactions, m.freezing_count
    );
    Ok(())
}

fn suite(c: &Common, repeats: usize) -> Result<()> {
    if repeats == 0 {
        return Err(Error::Config("--repeats must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for s in scenarios(c, default_matrix())? {
        for (label, p) in planners(c, true)? {
            cells.push(SuiteCell::new(s.clone(), p, &label));
        }
    }
    let keep = c.emit.contains(&Emit::Replay);
    let res = run_suite(&cells, &seed_list(c.seed, repeats), SuiteOptions { limits: limits(c)?, keep_logs: keep })?;
    emit(&res, c)?;
    for a in &res.aggregates {
        println!(
            "{:<24} success {:>5.1}% collision {:>5.1}% timeout {:>5.1}% frontal {:>5} freezing {:>4}",
            a.label, a.success_rate, a.collision_rate, a.timeout_rate, a.frontal_num, a.freezing_num
        );
    }
    Ok(())
}

fn ablation(c: &Common, repeats: usize, kind: AblationKind, grid: Vec<f64>) -> Result<()> {
    if repeats == 0 {
        return Err(Error::Config("--repeats must be at least 1".into()));
    }
    let grid = if grid.is_empty() { kind.default_grid() } else { grid };
    let base = planners(c, false)?.remove(0).1;
    let scen = scenarios(c, vec![ScenarioConfig::new(ScenarioKind::NC, Direction::UT, 20, 0)])?;
    let rows = run_ablation(kind, &grid, &scen, &base, &seed_list(c.seed, repeats), SuiteOptions { limits: limits(c)?, keep_logs: false })?;
    fs::create_dir_all(&c.out)?;
    if c.emit.contains(&Emit::Csv) {
        let mut w = create(&c.out.join("ablation.csv"))?;
        writeln!(w, "{}", AblationRow::HEADER)?;
        for r in &rows {
            r.write_csv(&mut w)?;
        }
    }
    if c.emit.contains(&Emit::Json) {
        serde_json::to_writer_pretty(create(&c.out.join("ablation.json"))?, &rows)?;
    }
    for r in &rows {
        let a = &r.aggregate;
        println!(
            "{:?}={:<5} success {:>5.1}% collision {:>5.1}% frontal {:>5} freezing {:>4}",
            kind, r.value, a.success_rate, a.collision_rate, a.frontal_num, a.freezing_num
        );
    }
    Ok(())
}

fn emit(res: &SuiteResult, c: &Common) -> Result<()> {
    fs::create_dir_all(&c.out)?;
    if c.emit.contains(&Emit::Csv) {
        res.write_metrics_csv(create(&c.out.join("metrics.csv"))?)?;
        res.write_aggregate_csv(create(&c.out.join("aggregate.csv"))?)?;
    }
    if c.emit.contains(&Emit::Json) {
        serde_json::to_writer_pretty(create(&c.out.join("metrics.json"))?, &res.episodes)?;
        serde_json::to_writer_pretty(create(&c.out.join("aggregate.json"))?, &res.aggregates)?;
    }
    if c.emit.contains(&Emit::Replay) {
        let dir = c.out.join("replay");
        res.write_replays(&dir)?;
        serde_json::to_writer_pretty(create(&dir.join("cells.json"))?, &res.cells)?;
    }
    Ok(())
}

/// Robot path, chosen primitives, the initial flow map and triangulation.
fn write_plotdata(dir: &Path, scenario: &ScenarioConfig, planner: &PlannerConfig, log: &EpisodeLog) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = create(&dir.join("robot_path.csv"))?;
    writeln!(w, "t,x,y,vx,vy")?;
    for f in &log.frames {
        writeln!(w, "{},{},{},{},{}", f.t, f.robot.pos.x, f.robot.pos.y, f.robot.vel.x, f.robot.vel.y)?;
    }
    let mut w = create(&dir.join("chosen_paths.csv"))?;
    writeln!(w, "cycle,t,freeze,k,x,y")?;
    for (n, cyc) in log.cycles.iter().enumerate() {
        for (k, p) in cyc.path.iter().enumerate() {
            writeln!(w, "{n},{},{},{k},{},{}", cyc.t, cyc.freeze as u8, p.x, p.y)?;
        }
    }
    if log.cycles.iter().any(|c| !c.table.is_empty()) {
        let mut w = create(&dir.join("cost_tables.csv"))?;
        writeln!(w, "cycle,t,{}", crowdnav::planner::CostRow::HEADER)?;
        for (n, cyc) in log.cycles.iter().enumerate() {
            for row in &cyc.table {
                writeln!(w, "{n},{},{row}", cyc.t)?;
            }
        }
    }
    let world = spawn(scenario)?;
    let fm = build_flowmap(&world.peds, world.map(), planner.flow_horizon, 0.0, FlowParams::default())?;
    let mut w = create(&dir.join("flowfield.csv"))?;
    writeln!(w, "t,x,y,rho,vx,vy")?;
    for s in fm.snapshots() {
        let g = s.grid();
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let (c, v) = (g.center(ix, iy), s.velocity(ix, iy));
                writeln!(w, "{},{},{},{},{},{}", s.time(), c.x, c.y, s.density(ix, iy), v.x, v.y)?;
            }
        }
    }
    let goal = world.robot_goal();
    let graph = triangulate(&world.peds, world.map(), &[world.robot.pos, goal], &TriangulateOptions::default())?;
    graph.write_csv(create(&dir.join("triangulation.csv"))?)?;
    Ok(())
}

fn replay(path: &Path, out: &Path) -> Result<()> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::Config(format!("no replay files under {}", path.display())));
    }
    let cells_file = files[0].with_file_name("cells.json");
    let known: Vec<SuiteCell> = if cells_file.exists() {
        serde_json::from_reader(BufReader::new(File::open(&cells_file)?))?
    } else {
        Vec::new()
    };
    let mut by_cell: BTreeMap<usize, Vec<(u64, EpisodeLog)>> = BTreeMap::new();
    for f in &files {
        let meta: EpisodeMeta = serde_json::from_reader(BufReader::new(File::open(f.with_extension("json"))?))?;
        let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let cell = stem.split_once('_').and_then(|(c, _)| c.parse().ok()).unwrap_or(0);
        let log = EpisodeLog::read_replay(meta, BufReader::new(File::open(f)?))?;
        by_cell.entry(cell).or_default().push((log.meta.seed, log));
    }
    let mut cells = Vec::new();
    let mut episodes = Vec::new();
    let mut seeds = Vec::new();
    for (idx, (cell, logs)) in by_cell.into_iter().enumerate() {
        let first = &logs[0].1.meta;
        let label = known.get(cell).map_or_else(|| format!("{}/cell{cell}", first.scenario.label()), |c| c.label.clone());
        cells.push(SuiteCell { label, scenario: first.scenario.clone(), planner: first.planner });
        for (seed, log) in logs {
            let rec = match compute_metrics(&log) {
                Ok(m) => EpisodeRecord { cell: idx, seed, metrics: Some(m), error: None, log: None },
                Err(e) => EpisodeRecord { cell: idx, seed, metrics: None, error: Some(e.to_string()), log: None },
            };
            seeds.push(seed);
            episodes.push(rec);
        }
    }
    seeds.sort_unstable();
    seeds.dedup();
    let aggregates = aggregate(&cells, &episodes);
    let res = SuiteResult { cells, seeds, episodes, aggregates };
    fs::create_dir_all(out)?;
    res.write_metrics_csv(create(&out.join("metrics.csv"))?)?;
    res.write_aggregate_csv(create(&out.join("aggregate.csv"))?)?;
    for a in &res.aggregates {
        println!("{:<24} episodes {:>3} success {:>5.1}% collision {:>5.1}%", a.label, a.episodes, a.success_rate, a.collision_rate);
    }
    Ok(())
}
