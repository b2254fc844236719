//! `skit` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 constraint violations,
//! 3 no feasible assignment.

pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use skit_core::allocation::io::{assignment_to_toml, parse_assignment, parse_problem, schedule_csv};
use skit_core::allocation::{assign_detectors, problem_size, verify_assignment, AllocationProblem, SolveOutcome};
use skit_core::metrics::io::{assemble, class_ids, parse_boxes};
use skit_core::metrics::{evaluate_report, rows_to_csv, MetricRow, ReportConfig};
use skit_core::sim::{apply_assignment, run_experiment, write_report, Report, Scenario};

pub use config::RunConfig;
pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATIONS: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Metrics(#[from] skit_core::metrics::MetricsError),
    #[error(transparent)]
    Alloc(#[from] skit_core::allocation::AllocError),
    #[error(transparent)]
    Sim(#[from] skit_core::sim::SimError),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "skit", version, about = "Detector evaluation, allocation and saliency replay")]
pub struct Cli {
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "skit-out")]
    pub out: PathBuf,
    /// TOML file with [fusion], [alloc] and [eval] defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluates detections against ground truth.
    Eval(EvalArgs),
    /// Allocation commands.
    #[command(subcommand)]
    Alloc(AllocCommand),
    /// Same as `alloc verify`.
    Verify(VerifyArgs),
    /// Same as `alloc size`.
    Size(SizeArgs),
    /// Replays a scenario and extracts salient locations.
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum AllocCommand {
    /// Solves a problem file for an optimal assignment.
    Solve(SolveArgs),
    /// Checks an assignment against every constraint family.
    Verify(VerifyArgs),
    /// Prints variable and constraint counts as `vars:constraints`.
    Size(SizeArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth box file.
    pub gt: PathBuf,
    /// Detection box file.
    pub det: PathBuf,
    /// Restricts evaluation to one class.
    #[arg(long)]
    pub class: Option<u32>,
    /// Lowest score the detector reports.
    #[arg(long)]
    pub score_cutoff: Option<f64>,
    /// Comma-separated max-detection settings.
    #[arg(long, value_delimiter = ',')]
    pub max_dets: Option<Vec<usize>>,
    /// Detector id used in the profile fragment.
    #[arg(long, default_value = "detector")]
    pub detector_id: String,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub problem: PathBuf,
    /// Solver time budget in seconds.
    #[arg(long)]
    pub time_budget: Option<f64>,
    /// Forbids machine sharing between streams.
    #[arg(long)]
    pub exclusive_machines: bool,
    /// Accuracy weight in the objective.
    #[arg(long)]
    pub w: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub problem: PathBuf,
    pub assignment: PathBuf,
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    pub problem: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub scenario: PathBuf,
    /// Solves this problem and replays the detectors chosen for `--stream`.
    #[arg(long)]
    pub alloc: Option<PathBuf>,
    /// Stream index used with `--alloc`.
    #[arg(long, default_value_t = 0)]
    pub stream: usize,
    /// Fusion setting as `key=value`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Grid resolution in meters.
    #[arg(long)]
    pub grid_res: Option<f64>,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let argv = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Like [`run`] for the standalone `alloc` binary: `alloc solve|verify|size`.
pub fn run_alloc<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if args.is_empty() {
        args.push("alloc".into());
    }
    args.insert(1, "alloc".into());
    args[0] = "skit".into();
    run(args)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn execute(cli: &Cli, argv: Vec<String>) -> Result<i32> {
    let name = match &cli.command {
        Command::Eval(_) => "eval",
        Command::Alloc(AllocCommand::Solve(_)) => "alloc solve",
        Command::Alloc(AllocCommand::Verify(_)) | Command::Verify(_) => "verify",
        Command::Alloc(AllocCommand::Size(_)) | Command::Size(_) => "size",
        Command::Replay(_) => "replay",
    };
    let mut m = RunManifest::new(name, argv);
    m.seed = cli.seed;
    let config = match &cli.config {
        Some(path) => RunConfig::parse(&m.read_input(path).map_err(io_err(path))?).map_err(CliError::Config)?,
        None => RunConfig::default(),
    };
    std::fs::create_dir_all(&cli.out).map_err(io_err(&cli.out))?;

    let code = match &cli.command {
        Command::Eval(a) => cmd_eval(a, &config, &cli.out, &mut m)?,
        Command::Alloc(AllocCommand::Solve(a)) => cmd_solve(a, &config, &cli.out, &mut m)?,
        Command::Alloc(AllocCommand::Verify(a)) | Command::Verify(a) => cmd_verify(a, &cli.out, &mut m)?,
        Command::Alloc(AllocCommand::Size(a)) | Command::Size(a) => cmd_size(a, &config, &cli.out, &mut m)?,
        Command::Replay(a) => cmd_replay(a, &config, cli.seed, &cli.out, &mut m)?,
    };
    m.exit_code = code;
    write_file(&cli.out.join("manifest.json"), &m.to_json())?;
    Ok(code)
}

/// Metric table, timing and profile accuracy of one evaluation.
#[derive(Debug, Clone)]
pub struct EvalOutput {
    /// `class,metric,iou,area,max_det,value` rows.
    pub csv: String,
    /// Per-image evaluation time in milliseconds: min, mean, max.
    pub image_time_ms: (f64, f64, f64),
    /// `[[detectors]]` entry carrying the measured oLRP and AR.
    pub profile_fragment: String,
}

fn find_row<'a>(rows: &'a [MetricRow], metric: &str) -> Option<&'a MetricRow> {
    rows.iter().find(|r| r.metric == metric && r.area == "all")
}

/// Evaluates detection records against ground truth, per class.
pub fn cmd_eval_text(gt: &str, det: &str, config: &RunConfig, class: Option<u32>, detector_id: &str) -> Result<EvalOutput> {
    let gts = parse_boxes(gt)?;
    let dts = parse_boxes(det)?;
    let mut cfg = ReportConfig::default();
    if let Some(c) = config.eval.score_cutoff {
        cfg.score_cutoff = c;
    }
    if let Some(md) = &config.eval.max_dets {
        cfg.max_dets = md.clone();
    }
    let classes = match class.or(config.eval.class_id) {
        Some(c) => vec![c],
        None => class_ids(&gts, &dts),
    };

    let mut csv = String::from("class,metric,iou,area,max_det,value\n");
    let mut times = Vec::new();
    let mut olrp = Vec::new();
    let mut ar = Vec::new();
    for &c in &classes {
        let images = assemble(&gts, &dts, Some(c));
        for img in &images {
            let start = Instant::now();
            evaluate_report(std::slice::from_ref(img), &cfg)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        let rows = evaluate_report(&images, &cfg)?;
        for line in rows_to_csv(&rows).lines().skip(1) {
            let _ = writeln!(csv, "{c},{line}");
        }
        let top = cfg.max_dets.iter().copied().max().unwrap_or(100);
        if let Some(r) = find_row(&rows, "oLRP") {
            olrp.push(r.value);
        }
        if let Some(r) = rows.iter().find(|r| r.metric == "AR" && r.area == "all" && r.max_det == Some(top)) {
            ar.push(r.value);
        }
    }

    let image_time_ms = if times.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let min = times.iter().copied().fold(f64::INFINITY, f64::min);
        let max = times.iter().copied().fold(0.0, f64::max);
        (min, times.iter().sum::<f64>() / times.len() as f64, max)
    };
    let mean = |v: &[f64]| {
        let ok: Vec<f64> = v.iter().copied().filter(|x| *x >= 0.0).collect();
        if ok.is_empty() {
            skit_core::metrics::UNDEFINED
        } else {
            ok.iter().sum::<f64>() / ok.len() as f64
        }
    };
    let profile_fragment = format!(
        "# Fill in machine, time_ms and ram_mb; add one value per bitrate.\n\
         [[detectors]]\nid = {}\nolrp = [{:?}]\nar = [{:?}]\n",
        toml::Value::String(detector_id.to_string()),
        mean(&olrp),
        mean(&ar),
    );
    Ok(EvalOutput { csv, image_time_ms, profile_fragment })
}

fn cmd_eval(a: &EvalArgs, config: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<i32> {
    let gt = m.read_input(&a.gt).map_err(io_err(&a.gt))?;
    let det = m.read_input(&a.det).map_err(io_err(&a.det))?;
    let mut config = config.clone();
    if a.score_cutoff.is_some() {
        config.eval.score_cutoff = a.score_cutoff;
    }
    if a.max_dets.is_some() {
        config.eval.max_dets = a.max_dets.clone();
    }
    m.config = serde_json::to_value(&config.eval).unwrap_or_default();
    let res = m.time("evaluate", || cmd_eval_text(&gt, &det, &config, a.class, &a.detector_id))?;
    write_file(&out.join("metrics.csv"), &res.csv)?;
    write_file(&out.join("profile.toml"), &res.profile_fragment)?;
    let (lo, mean, hi) = res.image_time_ms;
    write_file(
        &out.join("timing.csv"),
        &format!("stat,ms_per_image\nmin,{lo}\nmean,{mean}\nmax,{hi}\n"),
    )?;
    print!("{}", res.csv);
    println!("per-image eval ms: min {lo:.3} mean {mean:.3} max {hi:.3}");
    Ok(EXIT_OK)
}

fn load_problem(path: &Path, config: &RunConfig, m: &mut RunManifest) -> Result<AllocationProblem> {
    let text = m.read_input(path).map_err(io_err(path))?;
    let mut p = parse_problem(&text)?;
    if let Some(w) = config.alloc.w {
        p.params.w = w;
    }
    if let Some(x) = config.alloc.exclusive_machines {
        p.params.exclusive_machines = x;
    }
    Ok(p)
}

fn describe(outcome: &SolveOutcome) -> &'static str {
    match outcome {
        SolveOutcome::Optimal(_) => "optimal",
        SolveOutcome::Incumbent(_) => "incumbent",
        SolveOutcome::Infeasible => "infeasible",
        SolveOutcome::TimedOut => "timed_out",
    }
}

fn solve(p: &AllocationProblem, budget: Option<f64>, m: &mut RunManifest) -> Result<SolveOutcome> {
    let budget = match budget {
        Some(s) if !(s > 0.0) => return Err(CliError::Usage(format!("time budget {s} must be positive"))),
        other => other.map(Duration::from_secs_f64),
    };
    Ok(m.time("solve", || assign_detectors(p, budget))?)
}

fn cmd_solve(a: &SolveArgs, config: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<i32> {
    let mut config = config.clone();
    if a.w.is_some() {
        config.alloc.w = a.w;
    }
    if a.exclusive_machines {
        config.alloc.exclusive_machines = Some(true);
    }
    if a.time_budget.is_some() {
        config.alloc.time_budget = a.time_budget;
    }
    m.config = serde_json::to_value(&config.alloc).unwrap_or_default();
    let p = load_problem(&a.problem, &config, m)?;
    let outcome = solve(&p, config.alloc.time_budget, m)?;
    match outcome.assignment() {
        Some(asg) => {
            let text = assignment_to_toml(&p, asg, outcome.is_optimal());
            write_file(&out.join("assignment.toml"), &text)?;
            write_file(&out.join("schedule.csv"), &schedule_csv(&p, asg))?;
            print!("{text}");
            Ok(EXIT_OK)
        }
        None => {
            eprintln!("no feasible assignment ({})", describe(&outcome));
            Ok(EXIT_INFEASIBLE)
        }
    }
}

fn cmd_verify(a: &VerifyArgs, out: &Path, m: &mut RunManifest) -> Result<i32> {
    let p = load_problem(&a.problem, &RunConfig::default(), m)?;
    let text = m.read_input(&a.assignment).map_err(io_err(&a.assignment))?;
    let (asg, _) = parse_assignment(&p, &text)?;
    let tags = m.time("verify", || verify_assignment(&p, &asg));
    let mut report = String::new();
    for t in &tags {
        let _ = writeln!(report, "violated {}", t.name());
    }
    if tags.is_empty() {
        report.push_str("ok\n");
    }
    write_file(&out.join("verify.txt"), &report)?;
    print!("{report}");
    Ok(if tags.is_empty() { EXIT_OK } else { EXIT_VIOLATIONS })
}

fn cmd_size(a: &SizeArgs, config: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<i32> {
    let p = load_problem(&a.problem, config, m)?;
    let (vars, cons) = m.time("size", || problem_size(&p))?;
    let line = format!("{vars}:{cons}\n");
    write_file(&out.join("size.txt"), &line)?;
    print!("{line}");
    Ok(EXIT_OK)
}

/// Applies config overrides, `--override` pairs and `--grid-res`, in that
/// order, to the scenario's fusion settings.
fn fusion_settings(scenario: &mut Scenario, a: &ReplayArgs, config: &RunConfig) -> Result<()> {
    for (k, v) in config.fusion_overrides() {
        scenario.fusion.set(&k, &v)?;
    }
    for o in &a.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("override `{o}` is not key=value")))?;
        scenario.fusion.set(k, v)?;
    }
    if let Some(r) = a.grid_res {
        scenario.fusion.set("resolution", &r.to_string())?;
    }
    Ok(())
}

fn summary(r: &Report) -> String {
    let mut s = format!(
        "frames {} detections {} salient {} matched {} missed {}\n",
        r.frames,
        r.detections,
        r.salient.len(),
        r.matches.len(),
        r.missed.len()
    );
    for l in &r.salient {
        let _ = writeln!(s, "{:.2} {:.2} {:.2} p={:.3}", l.position.x, l.position.y, l.position.z, l.probability);
    }
    s
}

fn cmd_replay(a: &ReplayArgs, config: &RunConfig, seed: Option<u64>, out: &Path, m: &mut RunManifest) -> Result<i32> {
    let text = m.read_input(&a.scenario).map_err(io_err(&a.scenario))?;
    let mut scenario = Scenario::from_toml(&text)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    fusion_settings(&mut scenario, a, config)?;
    if let Some(path) = &a.alloc {
        let p = load_problem(path, config, m)?;
        let outcome = solve(&p, config.alloc.time_budget, m)?;
        let Some(asg) = outcome.assignment() else {
            eprintln!("no feasible assignment ({})", describe(&outcome));
            return Ok(EXIT_INFEASIBLE);
        };
        write_file(&out.join("assignment.toml"), &assignment_to_toml(&p, asg, outcome.is_optimal()))?;
        scenario = apply_assignment(&scenario, &p, asg, a.stream)?;
    }
    m.seed = Some(scenario.seed);
    m.config = serde_json::to_value(&scenario.fusion).unwrap_or_default();
    let fusion = scenario.fusion.clone();
    let report = m.time("replay", || run_experiment(&scenario, &fusion))?;
    m.time("write", || write_report(&report, out))?;
    print!("{}", summary(&report));
    Ok(EXIT_OK)
}
