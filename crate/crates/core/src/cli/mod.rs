//! Command-line front end.
//!
//! Each subcommand writes its artifacts plus a `manifest.json` into the
//! output directory. CSV files carry no timestamps; the manifest holds the
//! only one. Every SVG is rendered from the CSV text written next to it.

pub mod plot;
pub mod suite;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::engine::{simulate, sweep, EngineError, EventKind, Scale, SimResult};
use crate::game_solver::{barrier, geometric_ranges, trajectory_field, RetroTrajectory, SolverError};
use crate::scenarios::{CaseId, Scenario, ScenarioError, ScenarioFile, NMAC_RADIUS_M, SUITE_RANGES_M};
use crate::strategies::AircraftStrategy;
use table::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_THRESHOLD: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  1  suite: one or more acceptance thresholds failed
  2  configuration error (bad scenario file or flag)
  3  runtime error (simulation or I/O failure)
  4  domain error (parameter outside the model's range, e.g. --vh for barrier)";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("domain error: {0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Domain(_) => EXIT_DOMAIN,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<table::TableError> for CliError {
    fn from(e: table::TableError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::UndefinedTerminationLine(_) | SolverError::InvalidParameter(_) => CliError::Domain(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "bearing-game", version, about = "Bearing-only collision avoidance: encounter simulation, optimal trajectory fields and barriers.", after_help = EXIT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one encounter.
    Simulate(SimulateArgs),
    /// Simulate one encounter geometry over several initial ranges.
    Sweep(SweepArgs),
    /// Optimal trajectory field for an agile hazard.
    Field(FieldArgs),
    /// Barrier between miss-distances below and above a capture radius.
    Barrier(BarrierArgs),
    /// Run all eight test cases at 1000, 1500 and 2000 m and check thresholds.
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "BEARING_GAME_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct UnitsFlag {
    /// Export trajectories in metres and seconds.
    #[arg(long, conflicts_with = "normalized")]
    pub si: bool,
    /// Export trajectories in normalised units.
    #[arg(long)]
    pub normalized: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "case")]
    pub config: Option<PathBuf>,
    /// Test case id (H1, H2, C1, C6, C11, C16, O1, O2).
    #[arg(long = "case")]
    pub case: Option<String>,
    /// Initial range in metres (with --case).
    #[arg(long)]
    pub r0: Option<f64>,
    /// Integration step, normalised time.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub units: UnitsFlag,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Initial ranges in metres (repeatable); defaults to 1000, 1500, 2000.
    #[arg(long = "range")]
    pub ranges: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Hazard speed over aircraft speed, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub vh: f64,
    /// Number of terminal ranges per family.
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    /// Largest terminal range.
    #[arg(long, default_value_t = 4.0)]
    pub max_range: f64,
    /// Retro-time sampling step.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BarrierArgs {
    /// Hazard speed over aircraft speed, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub vh: f64,
    /// Capture radius, normalised.
    #[arg(long, default_value_t = 0.3)]
    pub rho: f64,
    /// Retro-time sampling step.
    #[arg(long, default_value_t = 0.001)]
    pub dt: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Integration step, normalised time.
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub units: UnitsFlag,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Simulate(a) => &a.common,
        Command::Sweep(a) => &a.common,
        Command::Field(a) => &a.common,
        Command::Barrier(a) => &a.common,
        Command::Suite(a) => &a.common,
    }
}

/// Runs a parsed command inside a pool sized by `--jobs`.
pub fn execute(cmd: &Command) -> Result<i32, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = common(cmd).jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Field(a) => cmd_field(a),
        Command::Barrier(a) => cmd_barrier(a),
        Command::Suite(a) => cmd_suite(a),
    })
}

fn load_scenario(args: &ScenarioArgs, r0_override: Option<f64>) -> Result<(Scenario, Option<PathBuf>), CliError> {
    let mut file = match (&args.config, &args.case) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            ScenarioFile::parse(&text)?
        }
        (None, Some(id)) => {
            let id: CaseId = id.parse()?;
            let r0 = r0_override
                .or(args.r0)
                .ok_or_else(|| CliError::Config("r0_m: --r0 is required with --case".into()))?;
            ScenarioFile::parse(&format!("case_id = \"{id}\"\nr0_m = {r0:?}\n"))?
        }
        (None, None) => return Err(CliError::Config("either --config or --case is required".into())),
    };
    if let Some(r0) = r0_override.or(if args.config.is_some() { args.r0 } else { None }) {
        file.r0_m = r0;
    }
    if let Some(dt) = args.dt {
        file.dt = Some(dt);
    }
    Ok((file.resolve()?, args.config.clone()))
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

fn write_manifest(dir: &Path, command: &str, config_path: Option<&Path>, resolved: serde_json::Value) -> Result<(), CliError> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "command": command,
        "config_path": config_path.map(|p| p.display().to_string()),
        "output_dir": dir.display().to_string(),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "created_unix_s": created,
        "determinism": "no random numbers are drawn; data files are identical across runs on the same platform",
        "resolved": resolved,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(dir, "manifest.json", &(text + "\n"))?;
    Ok(())
}

fn scale_for(si: bool, scenario: &Scenario) -> (Scale, &'static str, &'static str) {
    if si {
        (
            Scale {
                length: scenario.units.length_scale,
                time: scenario.units.time_scale(),
            },
            "m",
            "s",
        )
    } else {
        (Scale::NORMALIZED, "turn radii", "1/omega_a")
    }
}

/// Default export stride: about 4000 rows.
fn stride_for(res: &SimResult, requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| res.trajectory.samples.len().div_ceil(4000).max(1))
}

fn summary_json(s: &Scenario, res: &SimResult) -> serde_json::Value {
    let nmac = res.has_event(EventKind::Nmac);
    json!({
        "scenario": s.name,
        "r0_m": s.r0_m,
        "miss_distance_m": s.units.to_si_length(res.miss_distance),
        "miss_distance_normalized": res.miss_distance,
        "miss_time_s": s.units.to_si_time(res.miss_time),
        "miss_time_normalized": res.miss_time,
        "nmac": nmac,
        "collision": res.has_event(EventKind::Collision),
        "initially_closing": res.initially_closing,
        "events": res.events.iter().map(|e| json!({
            "kind": e.kind.name(),
            "time_normalized": e.time,
            "range_normalized": e.range,
        })).collect::<Vec<_>>(),
    })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32, CliError> {
    let (scenario, config_path) = load_scenario(&a.scenario, None)?;
    let out = scenario.output.dir.clone().unwrap_or_else(|| a.common.out.clone());
    fs::create_dir_all(&out)?;
    let res = simulate(&scenario.initial, &scenario.strategy, &scenario.hazard, &scenario.config)?;
    let si = if a.units.si || a.units.normalized { a.units.si } else { scenario.output.si.unwrap_or(false) };
    let (scale, lu, tu) = scale_for(si, &scenario);
    let csv = res.trajectory.to_csv(scale, stride_for(&res, scenario.output.stride));
    write(&out, "trajectory.csv", &csv)?;
    write(&out, "encounter.svg", &plot::encounter_svg(&Table::parse(&csv)?, &scenario.name, lu, tu)?)?;
    let summary = summary_json(&scenario, &res);
    write(&out, "summary.json", &(serde_json::to_string_pretty(&summary).unwrap_or_default() + "\n"))?;
    write_manifest(&out, "simulate", config_path.as_deref(), json!({ "scenario": scenario, "si": si }))?;
    println!(
        "{}: miss {:.1} m ({:.4} normalised) at t = {:.1} s, NMAC {}, collision {}",
        scenario.name,
        scenario.units.to_si_length(res.miss_distance),
        res.miss_distance,
        scenario.units.to_si_time(res.miss_time),
        res.has_event(EventKind::Nmac),
        res.has_event(EventKind::Collision)
    );
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32, CliError> {
    let ranges = if a.ranges.is_empty() { SUITE_RANGES_M.to_vec() } else { a.ranges.clone() };
    let (first, config_path) = load_scenario(&a.scenario, Some(ranges[0]))?;
    let out = first.output.dir.clone().unwrap_or_else(|| a.common.out.clone());
    fs::create_dir_all(&out)?;
    let points = sweep(
        &ranges,
        |r0| {
            let (s, _) = load_scenario(&a.scenario, Some(r0)).map_err(|e| EngineError::InvalidInitialState(e.to_string()))?;
            Ok((s.initial, s.config))
        },
        &first.strategy,
        &first.hazard,
    )?;
    let mut t = Table::new(&["r0_m", "miss_m", "miss_normalized", "miss_time_s", "nmac", "collision"]);
    for p in &points {
        let r = &p.result;
        t.push(vec![
            p.r0.to_string(),
            first.units.to_si_length(r.miss_distance).to_string(),
            r.miss_distance.to_string(),
            first.units.to_si_time(r.miss_time).to_string(),
            r.has_event(EventKind::Nmac).to_string(),
            r.has_event(EventKind::Collision).to_string(),
        ]);
    }
    let csv = t.to_csv();
    write(&out, "sweep.csv", &csv)?;
    write(&out, "sweep.svg", &plot::min_range_svg(&Table::parse(&csv)?, &format!("{}: minimum range", first.name), NMAC_RADIUS_M)?)?;
    write_manifest(&out, "sweep", config_path.as_deref(), json!({ "scenario": first, "ranges_m": ranges }))?;
    print!("{csv}");
    Ok(EXIT_OK)
}

fn field_table(trajectories: &[RetroTrajectory]) -> Table {
    let mut t = Table::new(&["family", "rT", "tau", "x", "y", "Vx", "Vy", "u_h"]);
    for tr in trajectories {
        for s in &tr.samples {
            t.push(vec![
                tr.terminal.side.name().to_string(),
                tr.terminal.r_t.to_string(),
                s.tau.to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.vx.to_string(),
                s.vy.to_string(),
                s.u_h.to_string(),
            ]);
        }
    }
    t
}

/// False for NaN as well as for non-positive values.
fn positive(x: f64) -> bool {
    x > 0.0
}

fn cmd_field(a: &FieldArgs) -> Result<i32, CliError> {
    if !(a.vh > 0.0 && a.vh <= 1.0) {
        return Err(CliError::Domain(format!("--vh must be in (0, 1] for a trajectory field, got {}", a.vh)));
    }
    if a.count == 0 || !positive(a.max_range) || !positive(a.dt) {
        return Err(CliError::Config("--count, --max-range and --dt must be positive".into()));
    }
    fs::create_dir_all(&a.common.out)?;
    let ranges = geometric_ranges((a.max_range / 40.0).min(0.05), a.max_range, a.count);
    let field = trajectory_field(a.vh, &ranges, f64::INFINITY, a.dt).map_err(solver_error)?;
    let csv = field_table(&field).to_csv();
    write(&a.common.out, "field.csv", &csv)?;
    write(&a.common.out, "field.svg", &plot::field_svg(&Table::parse(&csv)?, &format!("Optimal trajectories, v_h = {}", a.vh))?)?;
    write_manifest(&a.common.out, "field", None, json!({ "vh": a.vh, "terminal_ranges": ranges, "dtau": a.dt }))?;
    println!("{} trajectories written to {}", field.len(), a.common.out.display());
    Ok(EXIT_OK)
}

fn cmd_barrier(a: &BarrierArgs) -> Result<i32, CliError> {
    if !(a.vh > 0.0 && a.vh < 1.0) {
        return Err(CliError::Domain(format!("--vh must be in (0, 1) for a barrier, got {}", a.vh)));
    }
    if !positive(a.rho) {
        return Err(CliError::Domain(format!("--rho must be positive, got {}", a.rho)));
    }
    if !positive(a.dt) {
        return Err(CliError::Config("--dt must be positive".into()));
    }
    fs::create_dir_all(&a.common.out)?;
    let b = barrier(a.vh, a.rho, a.dt).map_err(solver_error)?;
    let right = RetroTrajectory::generate(
        crate::game_solver::TerminalCondition::new(a.rho, a.vh, crate::game_solver::Side::Right).map_err(solver_error)?,
        f64::INFINITY,
        a.dt,
    )
    .map_err(solver_error)?;
    let left = RetroTrajectory::generate(
        crate::game_solver::TerminalCondition::new(a.rho, a.vh, crate::game_solver::Side::Left).map_err(solver_error)?,
        f64::INFINITY,
        a.dt,
    )
    .map_err(solver_error)?;
    debug_assert_eq!(right.samples.len(), b.right.len());
    let csv = field_table(&[right, left]).to_csv();
    write(&a.common.out, "barrier.csv", &csv)?;
    write(&a.common.out, "barrier.svg", &plot::barrier_svg(&Table::parse(&csv)?, &format!("Barrier, v_h = {}, rho = {}", a.vh, a.rho))?)?;
    write_manifest(&a.common.out, "barrier", None, json!({ "vh": a.vh, "rho": a.rho, "dtau": a.dt }))?;
    println!("barrier with {} points per branch written to {}", b.right.len(), a.common.out.display());
    Ok(EXIT_OK)
}

/// Writes all suite artifacts into `dir` and returns the report.
pub fn write_suite(dir: &Path, dt: Option<f64>, si: bool) -> Result<suite::SuiteReport, CliError> {
    fs::create_dir_all(dir)?;
    let strategy = AircraftStrategy::bearing_only();
    let report = suite::run_suite(&strategy, dt)?;
    for c in &report.cases {
        let id = c.case.id;
        let csv = c.table().to_csv();
        write(dir, &format!("{id}_min_range.csv"), &csv)?;
        write(dir, &format!("{id}_min_range.svg"), &plot::min_range_svg(&Table::parse(&csv)?, &format!("{id}: minimum range"), NMAC_RADIUS_M)?)?;
        let (scale, lu, tu) = if si {
            (Scale { length: c.units.length_scale, time: c.units.time_scale() }, "m", "s")
        } else {
            (Scale::NORMALIZED, "turn radii", "1/omega_a")
        };
        let traj = c.longest.trajectory.to_csv(scale, stride_for(&c.longest, None));
        write(dir, &format!("{id}_2000m_trajectory.csv"), &traj)?;
        write(dir, &format!("{id}_2000m_trajectory.svg"), &plot::encounter_svg(&Table::parse(&traj)?, &format!("{id} at 2000 m"), lu, tu)?)?;
    }
    write(dir, "acceptance.csv", &report.checks_table().to_csv())?;
    Ok(report)
}

fn cmd_suite(a: &SuiteArgs) -> Result<i32, CliError> {
    let report = write_suite(&a.common.out, a.dt, a.units.si)?;
    write_manifest(
        &a.common.out,
        "suite",
        None,
        json!({ "strategy": AircraftStrategy::bearing_only(), "hazard": "non-responsive", "ranges_m": SUITE_RANGES_M, "dt": a.dt, "si": a.units.si }),
    )?;
    let checks = report.checks();
    for c in &checks {
        println!("{} {:<4} {:<20} {:>12.4} {}", if c.pass { "PASS" } else { "FAIL" }, c.case.to_string(), c.name, c.value, c.threshold);
    }
    Ok(if checks.iter().all(|c| c.pass) { EXIT_OK } else { EXIT_THRESHOLD })
}
