//! Command-line front end: `klein-fuchs <subcommand> [flags]`.
//!
//! Every subcommand reads JSON (from `--input FILE`, `-` for stdin) and writes one JSON
//! document to stdout. Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Error;
use crate::fuchsian::EquationA;
use crate::klein::{self, KleinData};
use crate::metrics::{self, AngleData, AngleReport, CountOptions, MetricReport};
use crate::monodromy::{self, LoopComparison, MonodromyOptions, MonodromyRep};
use crate::solver::{self, SolveOptions, SolveReport};

type C64 = Complex64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable read when `--workers` is absent.
pub const WORKERS_ENV: &str = "KLEIN_FUCHS_WORKERS";

/// Residual threshold used by `verify` for the two Klein solutions.
pub const VERIFY_SERIES_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "klein-fuchs", version, about = "Fuchsian equations with apparent singularities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Angle conditions and the bound on the number of metrics.
    CheckAngles {
        /// Comma-separated angles in units of 2 pi.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alphas: Option<Vec<f64>>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Accessory parameters making every integer-exponent point apparent.
    Solve(CommonArgs),
    /// Klein operator and hypergeometric target of a complete equation.
    Klein(CommonArgs),
    /// Series residuals and monodromy comparison for each complete equation.
    Verify(CommonArgs),
    /// Monodromy matrices along star-shaped loops.
    Monodromy(CommonArgs),
    /// Counts metrics with prescribed angles and positions.
    Count(CommonArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON input file, `-` for stdin.
    #[arg(long)]
    input: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Newton polishing tolerance.
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    /// Distance under which two roots are merged.
    #[arg(long, default_value_t = 1e-6)]
    dedupe: f64,
    /// Projective tolerance for monodromy comparisons.
    #[arg(long = "mono-tol", default_value_t = 1e-6)]
    mono_tol: f64,
    /// Series truncation order (default max(60, 4d)).
    #[arg(long = "series-T")]
    series_t: Option<usize>,
    #[arg(long, conflicts_with = "pretty")]
    json: bool,
    #[arg(long)]
    pretty: bool,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    Json,
    Pretty,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub polish_tol: f64,
    pub dedupe_tol: f64,
    pub mono_tol: f64,
    pub series_t: Option<usize>,
    pub output: OutputMode,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("tol", self.polish_tol), ("dedupe", self.dedupe_tol), ("mono-tol", self.mono_tol)] {
            if v <= 0.0 || !v.is_finite() {
                return Err(CliError::usage(format!("--{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.series_t {
            if t < 20 {
                return Err(CliError::usage(format!("--series-T must be at least 20, got {t}")));
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        Ok(())
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            polish_tol: self.polish_tol,
            dedupe_tol: self.dedupe_tol,
            ..SolveOptions::default()
        }
    }
}

impl From<&CommonArgs> for RunConfig {
    fn from(a: &CommonArgs) -> Self {
        RunConfig {
            seed: a.seed,
            polish_tol: a.tol,
            dedupe_tol: a.dedupe,
            mono_tol: a.mono_tol,
            series_t: a.series_t,
            output: if a.pretty { OutputMode::Pretty } else { OutputMode::Json },
            workers: a.workers,
        }
    }
}

/// Failure of a CLI run: exit code, machine-readable code and message.
#[derive(Debug)]
pub struct CliError {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            exit: EXIT_VALIDATION,
            code: "usage".into(),
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        CliError {
            exit: EXIT_VALIDATION,
            code: "malformed_input".into(),
            message: message.into(),
        }
    }

    fn numerical(code: &str, message: impl Into<String>) -> Self {
        CliError {
            exit: EXIT_NUMERICAL,
            code: code.into(),
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            exit: if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL },
            code: e.code().into(),
            message: e.to_string(),
        }
    }
}

/// Output of `solve`: the equation that was solved together with the report, so that it can
/// be fed back to `klein`, `verify` and `monodromy`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOutput {
    pub equation: EquationA,
    pub report: SolveReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyEntry {
    pub accessory: Vec<C64>,
    pub series_order: usize,
    pub residual_f1: f64,
    pub residual_f2: f64,
    pub max_projective_distance: f64,
    pub monodromy_match: bool,
    pub loops: Vec<LoopComparison>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub series_tol: f64,
    pub mono_tol: f64,
    pub all_ok: bool,
    pub equations: Vec<VerifyEntry>,
}

#[derive(Deserialize)]
struct AnglesOnly {
    angles: Vec<f64>,
}

fn read_input(path: Option<&str>) -> Result<Value, CliError> {
    let path = path.ok_or_else(|| CliError::usage("--input is required"))?;
    let mut text = String::new();
    if path == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::input(format!("reading stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("reading {path}: {e}")))?;
    }
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{path}: {e}")))
}

fn parse<T: for<'de> Deserialize<'de>>(v: Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::input(format!("expected {what}: {e}")))
}

/// Equations with all accessory parameters known: either a single equation or every
/// solution of a `solve` output.
fn complete_equations(v: Value) -> Result<Vec<EquationA>, CliError> {
    if v.get("report").is_some() && v.get("equation").is_some() {
        let out: SolveOutput = parse(v, "a solve output")?;
        let mut eqs = Vec::with_capacity(out.report.solutions.len());
        for s in &out.report.solutions {
            let acc = s
                .accessory
                .clone()
                .ok_or_else(|| CliError::numerical("missing_accessory", "a solution has no accessory vector"))?;
            eqs.push(out.equation.with_accessory(acc)?);
        }
        return Ok(eqs);
    }
    let eq: EquationA = parse(v, "an equation")?;
    if eq.is_skeleton() {
        return Err(CliError::input("the equation has no accessory parameters; run `solve` first"));
    }
    Ok(vec![eq])
}

fn series_order(cfg: &RunConfig, eq: &EquationA) -> usize {
    cfg.series_t.unwrap_or_else(|| klein::default_order(eq.d()))
}

fn check_angles(alphas: Option<Vec<f64>>, args: &CommonArgs) -> Result<AngleReport, CliError> {
    let angles = match alphas {
        Some(a) => a,
        None => parse::<AnglesOnly>(read_input(args.input.as_deref())?, "an object with `angles`")?.angles,
    };
    Ok(metrics::check_angle_values(&angles)?)
}

fn solve(cfg: &RunConfig, args: &CommonArgs) -> Result<SolveOutput, CliError> {
    let v = read_input(args.input.as_deref())?;
    let equation = if v.get("angles").is_some() {
        metrics::normalize_positions(&parse::<AngleData>(v, "angle data")?)?
    } else {
        parse::<EquationA>(v, "an equation")?
    };
    let report = solver::solve_equation(&equation, cfg.seed, &cfg.solve_options())?;
    Ok(SolveOutput { equation, report })
}

fn klein_cmd(args: &CommonArgs) -> Result<Vec<KleinData>, CliError> {
    let eqs = complete_equations(read_input(args.input.as_deref())?)?;
    eqs.iter().map(|e| klein::klein(e).map_err(CliError::from)).collect()
}

fn verify_one(cfg: &RunConfig, eq: &EquationA) -> Result<VerifyEntry, CliError> {
    let data = klein::klein(eq)?;
    let order = series_order(cfg, eq);
    let [f1, f2] = data.solutions(order)?;
    let residual_f1 = klein::equation_residual(eq, &f1)?;
    let residual_f2 = klein::equation_residual(eq, &f2)?;
    let cmp = monodromy::compare_with_hypergeometric(&data, &MonodromyOptions::comparison())?;
    let max_projective_distance = cmp.loops.iter().map(|l| l.projective_distance).fold(0.0, f64::max);
    let monodromy_match = max_projective_distance < cfg.mono_tol;
    Ok(VerifyEntry {
        accessory: eq.accessory.clone(),
        series_order: order,
        residual_f1,
        residual_f2,
        max_projective_distance,
        monodromy_match,
        loops: cmp.loops,
        ok: monodromy_match && residual_f1 < VERIFY_SERIES_TOL && residual_f2 < VERIFY_SERIES_TOL,
    })
}

fn verify(cfg: &RunConfig, args: &CommonArgs) -> Result<VerifyOutput, CliError> {
    let eqs = complete_equations(read_input(args.input.as_deref())?)?;
    let equations = eqs.iter().map(|e| verify_one(cfg, e)).collect::<Result<Vec<_>, _>>()?;
    Ok(VerifyOutput {
        series_tol: VERIFY_SERIES_TOL,
        mono_tol: cfg.mono_tol,
        all_ok: equations.iter().all(|e| e.ok),
        equations,
    })
}

fn monodromy_cmd(args: &CommonArgs) -> Result<Vec<MonodromyRep>, CliError> {
    let eqs = complete_equations(read_input(args.input.as_deref())?)?;
    eqs.iter()
        .map(|e| monodromy::monodromy_rep(e, None, &MonodromyOptions::default()).map_err(CliError::from))
        .collect()
}

fn count(cfg: &RunConfig, args: &CommonArgs) -> Result<MetricReport, CliError> {
    let data: AngleData = parse(read_input(args.input.as_deref())?, "angle data")?;
    let opts = CountOptions {
        seed: cfg.seed,
        solve: cfg.solve_options(),
        ..CountOptions::default()
    };
    Ok(metrics::count_metrics(&data, &opts)?)
}

fn render<T: Serialize>(value: &T, mode: OutputMode) -> Result<String, CliError> {
    let text = match mode {
        OutputMode::Json => serde_json::to_string(value),
        OutputMode::Pretty => serde_json::to_string_pretty(value),
    };
    text.map_err(|e| CliError::numerical("serialization", e.to_string()))
}

// Returns the rendered document and the exit code; `verify` reports failed checks with a
// numerical exit status while still printing the full report.
fn dispatch(command: Command) -> Result<(String, i32, OutputMode), CliError> {
    let (args, alphas) = match &command {
        Command::CheckAngles { alphas, common } => (common.clone(), alphas.clone()),
        Command::Solve(a)
        | Command::Klein(a)
        | Command::Verify(a)
        | Command::Monodromy(a)
        | Command::Count(a) => (a.clone(), None),
    };
    let cfg = RunConfig::from(&args);
    cfg.validate()?;
    let mode = cfg.output;
    let work = || -> Result<(String, i32), CliError> {
        Ok(match &command {
            Command::CheckAngles { .. } => (render(&check_angles(alphas.clone(), &args)?, mode)?, EXIT_OK),
            Command::Solve(_) => (render(&solve(&cfg, &args)?, mode)?, EXIT_OK),
            Command::Klein(_) => (render(&klein_cmd(&args)?, mode)?, EXIT_OK),
            Command::Verify(_) => {
                let out = verify(&cfg, &args)?;
                let exit = if out.all_ok { EXIT_OK } else { EXIT_NUMERICAL };
                (render(&out, mode)?, exit)
            }
            Command::Monodromy(_) => (render(&monodromy_cmd(&args)?, mode)?, EXIT_OK),
            Command::Count(_) => (render(&count(&cfg, &args)?, mode)?, EXIT_OK),
        })
    };
    let (text, exit) = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::numerical("worker_pool", e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    Ok((text, exit, mode))
}

/// Runs the CLI on `argv` (including the program name), writing to the given streams.
pub fn run_with<W: Write, E: Write>(argv: &[String], out: &mut W, err: &mut E) -> i32 {
    let pretty = argv.iter().any(|a| a == "--pretty");
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let _ = write!(err, "{e}");
            if !pretty {
                let _ = writeln!(out, "{}", error_json(&CliError::usage(e.kind().to_string())));
            }
            return EXIT_VALIDATION;
        }
    };
    match dispatch(cli.command) {
        Ok((text, exit, _)) => {
            let _ = writeln!(out, "{text}");
            if exit != EXIT_OK {
                let _ = writeln!(err, "error: verification failed");
            }
            exit
        }
        Err(e) => {
            let _ = writeln!(err, "error [{}]: {}", e.code, e.message);
            if !pretty {
                let _ = writeln!(out, "{}", error_json(&e));
            }
            e.exit
        }
    }
}

fn error_json(e: &CliError) -> String {
    serde_json::json!({ "error": { "code": e.code, "exit": e.exit, "message": e.message } }).to_string()
}

/// Runs the CLI on `argv` with the process streams.
pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
