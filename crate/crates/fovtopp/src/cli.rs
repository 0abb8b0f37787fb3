//! Command-line orchestration.
//!
//! [`run`] executes one subcommand and returns the process exit code together
//! with the JSON summary printed on standard output. Diagnostics go to the
//! `log` facade, which the binary routes to standard error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fovtopp_core::oracle::{convexity_probe, dp_solve, equivalence_probe, DpSettings, EquivalenceStats, DP_MAX_GRID};
use fovtopp_core::pathspec::{discretize, ProblemInstance};
use fovtopp_core::profilesolver::{build_speed_bounds, constraint_cache, solve, solve_point_mass};
use fovtopp_core::trajout::{sample_trajectory, verify};
use fovtopp_core::{Error as CoreError, Stage};
use fovtopp_core::fovcone::Interval;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::document::{load_problem_file, DocumentError};
use crate::serialize::{
    parse_trajectory_csv, parse_trajectory_json, plot_data_csv, profile_csv, report_json, serialize, Format,
    ReportDoc, SerializeError,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_INVALID: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    fn formats(self) -> &'static [Format] {
        match self {
            OutputFormat::Json => &[Format::Json],
            OutputFormat::Csv => &[Format::Csv],
            OutputFormat::Both => &[Format::Json, Format::Csv],
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fovtopp", version, about = "Time-optimal speed profiles for quadrotors that keep landmarks in view")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem document and write trajectory, profiles and report.
    Solve(CommonArgs),
    /// Re-check an existing trajectory file against a problem document.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Trajectory to check, `.json` or `.csv`.
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Compare the sweep's point-mass profile with the brute-force lattice search.
    OracleDp {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 400)]
        levels: usize,
    },
    /// Random equivalence probes, plus convexity probes on the document's node sets.
    OracleProbes {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Problem document (JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    pub format: OutputFormat,
    /// Sampling step of the written trajectory (s).
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub eps_h: Option<f64>,
    /// Allowed excess of the landmark bearing over the half-angle on the flown attitude.
    #[arg(long, default_value_t = 2.0)]
    pub margin_deg: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub grid_n: Option<usize>,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    pub eps_h: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    Solve,
    Verify { trajectory: PathBuf },
    OracleDp { levels: usize },
    OracleProbes { trials: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub dt: f64,
    pub margin_deg: f64,
    pub overrides: Overrides,
}

impl RunConfig {
    pub fn new(task: Task, input: impl Into<PathBuf>) -> RunConfig {
        RunConfig {
            task,
            input: Some(input.into()),
            out_dir: None,
            format: OutputFormat::Both,
            dt: 0.005,
            margin_deg: 2.0,
            overrides: Overrides::default(),
        }
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> RunConfig {
        let (task, common) = match cli.command {
            Command::Solve(common) => (Task::Solve, common),
            Command::Verify { common, trajectory } => (Task::Verify { trajectory }, common),
            Command::OracleDp { common, levels } => (Task::OracleDp { levels }, common),
            Command::OracleProbes { common, trials, seed } => (Task::OracleProbes { trials, seed }, common),
        };
        RunConfig {
            task,
            input: common.input,
            out_dir: common.out_dir,
            format: common.format,
            dt: common.dt,
            margin_deg: common.margin_deg,
            overrides: Overrides {
                grid_n: common.grid_n,
                sigma: common.sigma,
                eta: common.eta,
                eps_h: common.eps_h,
            },
        }
    }
}

/// Exit code and the JSON summary for standard output.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub summary: Value,
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Solver(#[from] CoreError),
    #[error(transparent)]
    Serialize(#[from] SerializeError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Failure {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
        move |source| Failure::Io { path: path.to_path_buf(), source }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Document(DocumentError::Io { .. }) | Failure::Io { .. } => EXIT_IO,
            Failure::Document(_) | Failure::Serialize(_) | Failure::Invalid(_) => EXIT_INVALID,
            Failure::Solver(e) => match e {
                CoreError::Validation(_)
                | CoreError::IrregularPath { .. }
                | CoreError::OutOfRange { .. }
                | CoreError::InvalidArgument(_) => EXIT_INVALID,
                _ => EXIT_INFEASIBLE,
            },
        }
    }

    fn status(&self) -> &'static str {
        match self.code() {
            EXIT_INFEASIBLE => "infeasible",
            EXIT_IO => "io_error",
            _ => "invalid",
        }
    }

    fn details(&self) -> Value {
        match self {
            Failure::Solver(CoreError::Infeasible { stage, direction, index }) => {
                json!({ "stage": stage.number(), "direction": direction.to_string(), "index": index })
            }
            Failure::Solver(
                CoreError::InfeasibleBounds { index, .. }
                | CoreError::StepInfeasible { index, .. }
                | CoreError::LandmarkTooClose { index, .. }
                | CoreError::SmoothingDegenerate { index }
                | CoreError::DegenerateThrust { index }
                | CoreError::SingularProfile { index },
            ) => json!({ "index": index }),
            _ => json!({}),
        }
    }
}

fn apply_overrides(instance: &mut ProblemInstance, overrides: &Overrides) -> Result<Value, Failure> {
    let st = &mut instance.solver;
    let document = json!({ "grid_n": st.grid_n, "sigma": st.sigma, "eta": st.eta, "eps_h": st.eps_h });
    if let Some(v) = overrides.grid_n {
        st.grid_n = v;
    }
    if let Some(v) = overrides.sigma {
        st.sigma = v;
    }
    if let Some(v) = overrides.eta {
        st.eta = v;
    }
    if let Some(v) = overrides.eps_h {
        st.eps_h = v;
    }
    instance.validate()?;
    let st = &instance.solver;
    Ok(json!({
        "document": document,
        "overrides": { "grid_n": overrides.grid_n, "sigma": overrides.sigma, "eta": overrides.eta, "eps_h": overrides.eps_h },
        "effective": { "grid_n": st.grid_n, "sigma": st.sigma, "eta": st.eta, "eps_h": st.eps_h },
    }))
}

fn load(config: &RunConfig) -> Result<(ProblemInstance, Value), Failure> {
    let input = config.input.as_deref().ok_or_else(|| Failure::Invalid("--input is required".into()))?;
    let mut instance = load_problem_file(input)?;
    let settings = apply_overrides(&mut instance, &config.overrides)?;
    Ok((instance, settings))
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<String>) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(Failure::io(&path))?;
    log::info!("wrote {}", path.display());
    written.push(name.to_string());
    Ok(())
}

/// Summary skeleton with the keys every summary carries.
fn summary(status: &str) -> Value {
    json!({ "status": status, "total_time": null, "stage1_time": null, "max_fov_slack_deg": null })
}

fn merge(target: &mut Value, extra: Value) {
    if let (Value::Object(t), Value::Object(e)) = (target, extra) {
        t.extend(e);
    }
}

pub fn run(config: &RunConfig) -> Outcome {
    let mut partial = summary("error");
    let result = match &config.task {
        Task::Solve => run_solve(config, &mut partial),
        Task::Verify { trajectory } => run_verify(config, trajectory),
        Task::OracleDp { levels } => run_oracle_dp(config, *levels),
        Task::OracleProbes { trials, seed } => run_probes(config, *trials, *seed),
    };
    match result {
        Ok(summary) => Outcome { code: EXIT_OK, summary },
        Err(failure) => {
            log::error!("{failure}");
            partial["status"] = json!(failure.status());
            partial["error"] = json!(failure.to_string());
            merge(&mut partial, failure.details());
            Outcome { code: failure.code(), summary: partial }
        }
    }
}

fn run_solve(config: &RunConfig, partial: &mut Value) -> Result<Value, Failure> {
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(Failure::Invalid(format!("--dt must be > 0, got {}", config.dt)));
    }
    let (instance, settings) = load(config)?;
    partial["settings"] = settings.clone();
    let solution = match solve(&instance) {
        Ok(solution) => solution,
        Err(e) => {
            if matches!(e, CoreError::Infeasible { stage: Stage::Rotor, .. }) {
                if let Ok((_, stage1)) = solve_point_mass(&instance) {
                    partial["stage1_time"] = json!(stage1.duration().ok());
                }
            }
            return Err(e.into());
        }
    };
    let stage1_time = solution.stage1.duration()?;
    let total_time = solution.total_time()?;
    log::info!("stage 1 time {stage1_time:.6} s, total time {total_time:.6} s");
    let trajectory = sample_trajectory(&instance, &solution.grid, &solution.stage2, &solution.schedule, config.dt)?;
    let report = verify(&trajectory, &instance, config.margin_deg);
    let report_doc = ReportDoc::new(&report, Some(&trajectory));

    let dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(Failure::io(&dir))?;
    let mut written = Vec::new();
    for format in config.format.formats() {
        let name = match format {
            Format::Json => "trajectory.json",
            Format::Csv => "trajectory.csv",
        };
        write(&dir, name, &serialize(&trajectory, Some(&report_doc), *format)?, &mut written)?;
    }
    write(&dir, "profile_stage1.csv", &profile_csv(&solution.stage1)?, &mut written)?;
    write(&dir, "profile_stage2.csv", &profile_csv(&solution.stage2)?, &mut written)?;
    write(&dir, "report.json", &report_json(&report_doc)?, &mut written)?;
    write(&dir, "speed_profile_plotdata.csv", &plot_data_csv(&solution.stage1, &solution.stage2)?, &mut written)?;

    let mut out = summary("ok");
    merge(
        &mut out,
        json!({
            "total_time": total_time,
            "stage1_time": stage1_time,
            "max_fov_slack_deg": report_doc.max_fov_slack_deg(),
            "clean": report_doc.clean,
            "violations": report_doc.violations,
            "samples": trajectory.samples.len(),
            "settings": settings,
            "out_dir": dir.display().to_string(),
            "files": written,
        }),
    );
    Ok(out)
}

fn run_verify(config: &RunConfig, trajectory_path: &Path) -> Result<Value, Failure> {
    let (instance, settings) = load(config)?;
    let text = fs::read_to_string(trajectory_path).map_err(Failure::io(trajectory_path))?;
    let is_csv = trajectory_path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let trajectory = if is_csv { parse_trajectory_csv(&text)? } else { parse_trajectory_json(&text)?.trajectory() };
    let report = verify(&trajectory, &instance, config.margin_deg);
    let report_doc = ReportDoc::new(&report, Some(&trajectory));
    let mut written = Vec::new();
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(Failure::io(dir))?;
        write(dir, "report.json", &report_json(&report_doc)?, &mut written)?;
    }
    let mut out = summary(if report_doc.clean { "ok" } else { "violations" });
    merge(
        &mut out,
        json!({
            "total_time": trajectory.total_time,
            "max_fov_slack_deg": report_doc.max_fov_slack_deg(),
            "clean": report_doc.clean,
            "violations": report_doc.violations,
            "samples": trajectory.samples.len(),
            "settings": settings,
            "files": written,
        }),
    );
    Ok(out)
}

fn run_oracle_dp(config: &RunConfig, levels: usize) -> Result<Value, Failure> {
    let (instance, settings) = load(config)?;
    if instance.solver.grid_n > DP_MAX_GRID {
        return Err(Failure::Invalid(format!(
            "grid_n {} exceeds the lattice search limit {DP_MAX_GRID}; pass --grid-n",
            instance.solver.grid_n
        )));
    }
    let grid = discretize(&instance)?;
    let sweep = solve_point_mass(&instance).map(|(_, p)| p);
    let dp = dp_solve(&instance, &grid, &DpSettings::new(levels));
    let sweep_time = sweep.as_ref().ok().and_then(|p| p.duration().ok());
    let dp_time = dp.as_ref().ok().and_then(|p| p.duration().ok());
    let relative = match (sweep_time, dp_time) {
        (Some(a), Some(b)) => Some((a - b).abs() / a),
        _ => None,
    };
    let mut out = summary(if sweep.is_ok() == dp.is_ok() { "agree" } else { "disagree" });
    merge(
        &mut out,
        json!({
            "total_time": dp_time,
            "stage1_time": sweep_time,
            "sweep_feasible": sweep.is_ok(),
            "dp_feasible": dp.is_ok(),
            "relative_difference": relative,
            "levels": levels,
            "settings": settings,
        }),
    );
    Ok(out)
}

fn stats_json(stats: &EquivalenceStats) -> Value {
    json!({
        "trials": stats.trials,
        "agreements": stats.agreements,
        "disagreements": stats.disagreements,
        "boundary": stats.boundary,
        "degenerate": stats.degenerate,
        "satisfied": stats.satisfied,
    })
}

/// Nodes probed for convexity when a document is given.
const PROBED_NODES: usize = 20;

fn run_probes(config: &RunConfig, trials: usize, seed: u64) -> Result<Value, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (fov, cone) = equivalence_probe(trials, &mut rng);
    let mut ok = fov.disagreements == 0 && cone.disagreements == 0;
    let mut out = summary("ok");
    out["fov"] = stats_json(&fov);
    out["cone"] = stats_json(&cone);
    if config.input.is_some() {
        let (instance, settings) = load(config)?;
        let grid = discretize(&instance)?;
        let bounds = build_speed_bounds(&instance, &grid)?;
        let nodes = constraint_cache(&instance, &grid, &bounds, Stage::PointMass, None)?;
        let n = grid.n();
        let mut probed = Vec::new();
        for k in 1..PROBED_NODES {
            let node = &nodes[k * n / PROBED_NODES];
            let top = node.bounds.hi.min(400.0);
            let window = [Interval::new(node.bounds.lo, top), Interval::new(-200.0, 200.0)];
            let outcome = convexity_probe(node, window, trials.div_ceil(PROBED_NODES).max(1), &mut rng);
            let convex = match &outcome {
                Ok(o) => Some(o.convex),
                Err(_) => None,
            };
            ok &= convex != Some(false);
            probed.push(json!({ "index": node.index, "constraints": node.constraints.len(), "convex": convex }));
        }
        out["convexity"] = json!(probed);
        out["settings"] = settings;
    }
    out["status"] = json!(if ok { "ok" } else { "failed" });
    Ok(out)
}
