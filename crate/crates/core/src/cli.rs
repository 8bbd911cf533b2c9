//! Command-line surface: `gen`, `plan`, `validate`, `oracle` and `sweep`.
//!
//! Exit codes: 0 success, 1 validation failed, 2 infeasible, 3 input error,
//! 4 solver or numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bezier::{SegmentPair, ShapeCurve, TimingCurve};
use crate::channel::{db_to_linear, linear_to_db, BaseStation, ChannelParams};
use crate::error::{Error, Result};
use crate::gcs::{build_gcs, enumerate_oracle, plan_route, relative_gap, RouteOptions, Weights};
use crate::planner::{
    generate_scenario, plan, sample_trajectory, scenario_gamma_min, sweep, validate_trajectory, CheckResult, PlanOptions, PlanResult, Scenario, ScenarioDefaults, SweepParam,
    TrajectorySample, ValidationReport, SPEED_REL_TOL,
};
use crate::regions::{build_disks, build_graph, Airspace};
use crate::urllc::UrllcParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

pub const METRICS_FILE: &str = "metrics.json";
pub const TIMING_FILE: &str = "timing.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const HANDOVER_FILE: &str = "handovers.csv";
pub const SEGMENTS_FILE: &str = "segments.json";

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "t_s",
    "x_m",
    "y_m",
    "z_m",
    "vx_mps",
    "vy_mps",
    "speed_mps",
    "ax_mps2",
    "ay_mps2",
    "serving_bs",
    "snr_db",
    "snr_margin_db",
];

// ---------------------------------------------------------------- scenario file

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaFile {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub alpha: f64,
    pub beta: f64,
    pub lambda_ho: f64,
    pub gamma_sm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub fc_hz: f64,
    pub c_mps: f64,
    pub a: f64,
    pub b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    pub tx_power_w: f64,
    pub rx_gain: f64,
    pub noise_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrllcFile {
    pub bandwidth_hz: f64,
    pub tau_s: f64,
    pub latency_budget_s: f64,
    pub eps_max: f64,
    pub r_req: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsFile {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// On-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub area: AreaFile,
    pub altitude_m: f64,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub v_max_mps: f64,
    pub bezier_degree: usize,
    pub continuity_order: usize,
    pub weights: WeightsFile,
    pub channel: ChannelFile,
    pub urllc: UrllcFile,
    pub bs: Vec<BsFile>,
}

/// dB values rounded to 1e-9 so that defaults print as e.g. `3.0`.
fn tidy_db(x: f64) -> f64 {
    (linear_to_db(x) * 1e9).round() / 1e9
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let a = s.airspace;
        let c = s.channel;
        let w = s.weights;
        let u = s.urllc;
        Self {
            area: AreaFile {
                x_min: a.x_min,
                x_max: a.x_max,
                y_min: a.y_min,
                y_max: a.y_max,
            },
            altitude_m: a.altitude_m,
            start: s.start,
            goal: s.goal,
            v_max_mps: s.v_max,
            bezier_degree: s.degree,
            continuity_order: s.continuity,
            weights: WeightsFile {
                alpha: w.alpha,
                beta: w.beta,
                lambda_ho: w.lambda_ho,
                gamma_sm: w.gamma_sm,
            },
            channel: ChannelFile {
                fc_hz: c.fc_hz,
                c_mps: c.c_mps,
                a: c.a_logistic,
                b: c.b_logistic,
                eta_los_db: tidy_db(c.eta_los),
                eta_nlos_db: tidy_db(c.eta_nlos),
                tx_power_w: c.tx_power_w,
                rx_gain: c.rx_gain,
                noise_w: c.noise_w,
            },
            urllc: UrllcFile {
                bandwidth_hz: u.bandwidth_hz,
                tau_s: u.tau_s,
                latency_budget_s: u.latency_budget_s,
                eps_max: u.eps_max,
                r_req: u.r_req,
            },
            bs: s
                .base_stations
                .iter()
                .map(|b| BsFile {
                    id: b.id,
                    x: b.x_m,
                    y: b.y_m,
                    z: b.z_m,
                })
                .collect(),
        }
    }
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let f = self;
        let s = Scenario {
            airspace: Airspace {
                x_min: f.area.x_min,
                x_max: f.area.x_max,
                y_min: f.area.y_min,
                y_max: f.area.y_max,
                altitude_m: f.altitude_m,
            },
            start: f.start,
            goal: f.goal,
            base_stations: f.bs.iter().map(|b| BaseStation::new(b.id, b.x, b.y, b.z)).collect(),
            channel: ChannelParams {
                fc_hz: f.channel.fc_hz,
                c_mps: f.channel.c_mps,
                a_logistic: f.channel.a,
                b_logistic: f.channel.b,
                eta_los: db_to_linear(f.channel.eta_los_db),
                eta_nlos: db_to_linear(f.channel.eta_nlos_db),
                tx_power_w: f.channel.tx_power_w,
                rx_gain: f.channel.rx_gain,
                noise_w: f.channel.noise_w,
            },
            urllc: UrllcParams::new(
                f.urllc.bandwidth_hz,
                f.urllc.tau_s,
                f.urllc.latency_budget_s,
                f.urllc.eps_max,
                f.urllc.r_req,
            )?,
            weights: Weights {
                alpha: f.weights.alpha,
                beta: f.weights.beta,
                lambda_ho: f.weights.lambda_ho,
                gamma_sm: f.weights.gamma_sm,
            },
            v_max: f.v_max_mps,
            degree: f.bezier_degree,
            continuity: f.continuity_order,
        };
        s.validate()?;
        Ok(s)
    }
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    file.into_scenario()
}

pub fn scenario_json(s: &Scenario) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&ScenarioFile::from(s))?;
    text.push('\n');
    Ok(text)
}

// ---------------------------------------------------------------- plan artifacts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRecord {
    pub serving_bs: u32,
    pub shape: Vec<[f64; 2]>,
    pub timing: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentsFile {
    pub segments: Vec<SegmentRecord>,
}

impl SegmentsFile {
    pub fn from_plan(result: &PlanResult) -> Self {
        Self {
            segments: result
                .serving_sequence
                .iter()
                .zip(&result.segments)
                .map(|(&id, s)| SegmentRecord {
                    serving_bs: id,
                    shape: s.shape.control_points().to_vec(),
                    timing: s.timing.control_points().iter().map(|p| p[0]).collect(),
                })
                .collect(),
        }
    }

    pub fn to_segments(&self) -> Result<(Vec<u32>, Vec<SegmentPair>)> {
        let mut ids = Vec::new();
        let mut segs = Vec::new();
        for r in &self.segments {
            ids.push(r.serving_bs);
            let shape = ShapeCurve::new(r.shape.clone())?;
            let timing = TimingCurve::new(r.timing.iter().map(|&h| [h]).collect())?;
            segs.push(SegmentPair::new(shape, timing)?);
        }
        Ok((ids, segs))
    }
}

#[derive(Debug, Clone, Serialize)]
struct CostJson {
    geometric: f64,
    time: f64,
    handover: f64,
    smoothing: f64,
    total: f64,
}

/// Deterministic plan metrics; wall-clock time lives in [`TIMING_FILE`].
#[derive(Debug, Clone, Serialize)]
struct MetricsJson {
    status: &'static str,
    handover_count: usize,
    total_time_s: f64,
    path_length_m: f64,
    peak_acceleration_mps2: f64,
    serving_sequence: Vec<u32>,
    cost: CostJson,
    lower_bound: f64,
    gap: f64,
    gamma_min: f64,
    gamma_min_db: f64,
    num_regions: usize,
    num_edges: usize,
    candidates: usize,
    seed: u64,
    trials: usize,
}

#[derive(Debug, Clone, Serialize)]
struct FailureJson {
    status: &'static str,
    stage: Option<String>,
    detail: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_trajectory_csv(path: &Path, rows: &[TrajectorySample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.write_record([
            f6(r.t_s),
            f6(r.position[0]),
            f6(r.position[1]),
            f6(r.position[2]),
            f6(r.velocity[0]),
            f6(r.velocity[1]),
            f6(r.speed_mps),
            f6(r.acceleration[0]),
            f6(r.acceleration[1]),
            r.serving_bs.to_string(),
            f6(r.snr_db),
            f6(r.snr_margin_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed trajectory CSV row, in header order.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<[f64; 12]>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TRAJECTORY_HEADER {
        return Err(Error::InvalidInput(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut row = [0.0; 12];
        for (k, field) in rec.iter().enumerate().take(12) {
            row[k] = field
                .parse()
                .map_err(|_| Error::InvalidInput(format!("{}: row {} field {k} is not a number", path.display(), i + 1)))?;
        }
        if rec.len() != 12 {
            return Err(Error::InvalidInput(format!("{}: row {} has {} fields", path.display(), i + 1, rec.len())));
        }
        out.push(row);
    }
    Ok(out)
}

fn write_handover_csv(path: &Path, result: &PlanResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_s", "from_bs", "to_bs"])?;
    for h in &result.handovers {
        w.write_record([f6(h.time_s), h.from_bs.to_string(), h.to_bs.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn metrics(result: &PlanResult, options: &PlanOptions) -> MetricsJson {
    let c = result.cost;
    MetricsJson {
        status: "ok",
        handover_count: result.handover_count,
        total_time_s: result.total_time_s,
        path_length_m: result.path_length_m,
        peak_acceleration_mps2: result.peak_acceleration_mps2,
        serving_sequence: result.serving_sequence.clone(),
        cost: CostJson {
            geometric: c.geometric,
            time: c.time,
            handover: c.handover,
            smoothing: c.smoothing,
            total: c.total,
        },
        lower_bound: result.lower_bound,
        gap: result.gap,
        gamma_min: result.gamma_min,
        gamma_min_db: linear_to_db(result.gamma_min),
        num_regions: result.num_regions,
        num_edges: result.num_edges,
        candidates: result.candidates,
        seed: options.seed,
        trials: options.trials,
    }
}

/// Writes every plan artifact into `dir`.
pub fn write_plan_artifacts(
    dir: &Path,
    scenario: &Scenario,
    result: &PlanResult,
    options: &PlanOptions,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join(METRICS_FILE), &metrics(result, options))?;
    write_json(
        &dir.join(TIMING_FILE),
        &serde_json::json!({ "wall_time_s": result.wall_time_s }),
    )?;
    write_json(&dir.join(SEGMENTS_FILE), &SegmentsFile::from_plan(result))?;
    let rows = sample_trajectory(
        scenario,
        &result.serving_sequence,
        &result.segments,
        options.samples_per_segment,
        result.gamma_min,
    )?;
    write_trajectory_csv(&dir.join(TRAJECTORY_FILE), &rows)?;
    write_handover_csv(&dir.join(HANDOVER_FILE), result)?;
    Ok(())
}

/// Validation from plan artifacts alone: segments are rebuilt from the
/// segment file and the trajectory CSV is checked for the speed limit, the
/// link margin and agreement with the segments.
pub fn validate_artifacts(scenario: &Scenario, dir: &Path, samples_per_segment: usize) -> Result<ValidationReport> {
    let text = fs::read_to_string(dir.join(SEGMENTS_FILE))?;
    let file: SegmentsFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", dir.join(SEGMENTS_FILE).display())))?;
    let (ids, segs) = file.to_segments()?;
    let mut report = validate_trajectory(scenario, &ids, &segs, samples_per_segment)?;

    let rows = read_trajectory_csv(&dir.join(TRAJECTORY_FILE))?;
    if rows.is_empty() {
        return Err(Error::InvalidInput("trajectory CSV has no rows".into()));
    }
    // values carry 6 decimals
    let fmt_slack = 1e-6;
    let csv_speed = rows.iter().map(|r| r[6].max(r[4].hypot(r[5]) - fmt_slack)).fold(0.0, f64::max);
    let v_lim = scenario.v_max * (1.0 + SPEED_REL_TOL) + fmt_slack;
    let csv_margin = rows.iter().map(|r| r[11]).fold(f64::INFINITY, f64::min);
    let ordered = rows.windows(2).all(|w| w[1][0] > w[0][0]);
    let mut mismatch = 0.0f64;
    for r in &rows {
        let t = r[0];
        let Some(k) = segs.iter().position(|s| t <= s.end_time() + fmt_slack) else {
            mismatch = f64::INFINITY;
            break;
        };
        let s = &segs[k];
        let xi = s.time_sample(t.clamp(s.start_time(), s.end_time()))?;
        let p = s.shape.eval(xi);
        mismatch = mismatch.max((p[0] - r[1]).abs()).max((p[1] - r[2]).abs());
    }
    // time rounding moves the point by at most v_max * 5e-7 plus the print rounding
    let pos_limit = scenario.v_max * 5e-7 + 1e-6;
    let margin_limit = -1e-5;
    report.checks.extend([
        CheckResult {
            name: "csv_speed".into(),
            passed: csv_speed <= v_lim,
            value: csv_speed,
            limit: v_lim,
        },
        CheckResult {
            name: "csv_snr_margin_db".into(),
            passed: csv_margin >= margin_limit,
            value: csv_margin,
            limit: margin_limit,
        },
        CheckResult {
            name: "csv_time_order".into(),
            passed: ordered,
            value: if ordered { 1.0 } else { 0.0 },
            limit: 1.0,
        },
        CheckResult {
            name: "csv_matches_segments".into(),
            passed: mismatch <= pos_limit,
            value: mismatch,
            limit: pos_limit,
        },
    ]);
    report.passed = report.checks.iter().all(|c| c.passed);
    Ok(report)
}

// ---------------------------------------------------------------- arguments

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Quiet,
    Info,
    Debug,
}

#[derive(Debug, Parser)]
#[command(name = "handover-gcs", version, about = "Handover-aware URLLC trajectory planner")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "info", global = true)]
    pub log_level: LogLevel,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random scenario with the default parameters.
    Gen(GenArgs),
    /// Plan a trajectory and export metrics, samples and the handover schedule.
    Plan(PlanArgs),
    /// Re-check a plan from its exported files.
    Validate(ValidateArgs),
    /// Compare the planner against exhaustive path enumeration.
    Oracle(OracleArgs),
    /// Re-plan over a grid of one cost weight.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    pub num_bs: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WeightOverrides {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lambda_ho: Option<f64>,
    #[arg(long)]
    pub gamma_sm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: u32,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(100..))]
    pub samples: u32,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub weights: WeightOverrides,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub plan_dir: PathBuf,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(100..))]
    pub samples: u32,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub max_paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParamArg {
    LambdaHo,
    GammaSm,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub param: ParamArg,
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub values: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..))]
    pub trials: u32,
}

// ---------------------------------------------------------------- commands

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::Numerical(_) => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

fn apply_overrides(s: &mut Scenario, w: &WeightOverrides) -> Result<()> {
    let cur = s.weights;
    s.weights = Weights {
        alpha: w.alpha.unwrap_or(cur.alpha),
        beta: w.beta.unwrap_or(cur.beta),
        lambda_ho: w.lambda_ho.unwrap_or(cur.lambda_ho),
        gamma_sm: w.gamma_sm.unwrap_or(cur.gamma_sm),
    };
    s.weights.validate()
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let s = generate_scenario(a.seed, a.num_bs as usize, &ScenarioDefaults::default())?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&a.out, scenario_json(&s)?)?;
    writeln!(out, "wrote {} base stations to {}", s.base_stations.len(), a.out.display())?;
    Ok(EXIT_OK)
}

fn cmd_plan(a: &PlanArgs, out: &mut dyn Write) -> Result<i32> {
    let mut s = read_scenario(&a.scenario)?;
    apply_overrides(&mut s, &a.weights)?;
    let options = PlanOptions {
        seed: a.seed,
        trials: a.trials as usize,
        samples_per_segment: a.samples as usize,
    };
    match plan(&s, &options) {
        Ok(r) => {
            write_plan_artifacts(&a.out_dir, &s, &r, &options)?;
            writeln!(
                out,
                "handovers {}  T {:.3} s  length {:.3} m  cost {:.6}  bound {:.6}  gap {:.3e}",
                r.handover_count, r.total_time_s, r.path_length_m, r.cost.total, r.lower_bound, r.gap
            )?;
            writeln!(out, "artifacts in {}", a.out_dir.display())?;
            Ok(EXIT_OK)
        }
        Err(e @ (Error::Infeasible { .. } | Error::Numerical(_))) => {
            fs::create_dir_all(&a.out_dir)?;
            let (status, stage) = match &e {
                Error::Infeasible { stage, .. } => ("infeasible", Some(stage.to_string())),
                _ => ("solver_failure", None),
            };
            write_json(
                &a.out_dir.join(METRICS_FILE),
                &FailureJson {
                    status,
                    stage,
                    detail: e.to_string(),
                },
            )?;
            writeln!(out, "{e}")?;
            Ok(exit_code(&e))
        }
        Err(e) => Err(e),
    }
}

fn print_report(out: &mut dyn Write, report: &ValidationReport) -> Result<()> {
    writeln!(out, "min SNR margin     {:.6e} (relative {:.3e})", report.min_snr_margin, report.min_snr_margin_rel)?;
    writeln!(out, "max speed          {:.6} m/s", report.max_speed_mps)?;
    for (p, r) in report.continuity_residuals.iter().enumerate() {
        writeln!(out, "continuity order {p} {r:.3e}")?;
    }
    for c in &report.checks {
        writeln!(
            out,
            "{:<5} {:<22} value {:.6e} limit {:.6e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        )?;
    }
    writeln!(out, "{}", if report.passed { "PASS" } else { "FAIL" })?;
    Ok(())
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let s = read_scenario(&a.scenario)?;
    let report = validate_artifacts(&s, &a.plan_dir, a.samples as usize)?;
    print_report(out, &report)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_VALIDATION_FAILED })
}

fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<i32> {
    let s = read_scenario(&a.scenario)?;
    let g_min = scenario_gamma_min(&s)?;
    let disks = build_disks(&s.base_stations, &s.airspace, &s.channel, g_min);
    let graph = build_graph(&disks, s.start, s.goal);
    let problem = build_gcs(&graph, &s.gcs_settings())?;
    let best = match enumerate_oracle(&problem, a.max_paths) {
        Err(Error::PathGuard(n)) => {
            writeln!(
                out,
                "the coverage graph has more than {n} simple paths; raise --max-paths or use a scenario with fewer stations"
            )?;
            return Ok(EXIT_INPUT);
        }
        r => r?,
    };
    let route = plan_route(
        &problem,
        &RouteOptions {
            trials: a.trials as usize,
            seed: a.seed,
            ..RouteOptions::default()
        },
    )?;
    let plan_cost = route.solution.cost.total;
    let gap = relative_gap(plan_cost, best.cost.total);
    writeln!(out, "plan cost          {plan_cost:.9}")?;
    writeln!(out, "plan sequence      {:?}", route.solution.bs_sequence)?;
    writeln!(out, "oracle best cost   {:.9}", best.cost.total)?;
    writeln!(out, "oracle sequence    {:?}", best.bs_sequence)?;
    writeln!(out, "relaxation bound   {:.9}", route.lower_bound)?;
    writeln!(out, "relative gap       {gap:.3e}")?;
    Ok(EXIT_OK)
}

fn opt(x: Option<f64>) -> String {
    x.map(f6).unwrap_or_default()
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let s = read_scenario(&a.scenario)?;
    let param = match a.param {
        ParamArg::LambdaHo => SweepParam::LambdaHo,
        ParamArg::GammaSm => SweepParam::GammaSm,
    };
    let options = PlanOptions {
        seed: a.seed,
        trials: a.trials as usize,
        ..PlanOptions::default()
    };
    let rows = sweep(&s, param, &a.values, &options)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record(["param", "value", "N", "T_s", "length_m", "peak_acc_mps2", "cost", "gap", "error"])?;
    for r in &rows {
        w.write_record([
            param.name().to_string(),
            r.value.to_string(),
            r.handover_count.map(|n| n.to_string()).unwrap_or_default(),
            opt(r.total_time_s),
            opt(r.path_length_m),
            opt(r.peak_acceleration_mps2),
            opt(r.cost),
            r.gap.map(|g| format!("{g:.6e}")).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    writeln!(out, "wrote {} rows to {}", rows.len(), a.out.display())?;
    Ok(EXIT_OK)
}

fn init_logging(level: LogLevel) {
    let filter = match level {
        LogLevel::Quiet => log::LevelFilter::Error,
        LogLevel::Info => log::LevelFilter::Info,
        LogLevel::Debug => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(filter).format_timestamp(None).try_init();
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> i32 {
    let r = match &cli.command {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Plan(a) => cmd_plan(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            log::error!("{e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary: parses `args`, runs, returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
        }
    };
    init_logging(cli.log_level);
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    execute(&cli, &mut lock)
}
