//! Command-line front end.
//!
//! Exit status: 0 success, 1 the property is violated (`verify` only),
//! 2 usage or input error, 3 solver or environment error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use tree_sentinel_core::detector::DetectError;
use tree_sentinel_core::extraction::ExtractionError;
use tree_sentinel_core::num::{format_rational, parse_rational};
use tree_sentinel_core::oracle::{brute_force_violations, GridSpec, OracleError, DEFAULT_GRID_CAP};
use tree_sentinel_core::smt::{SmtError, UnknownReason, Verifier};
use tree_sentinel_core::{
    detect_violation_ranges, filter_check, parse_property, ConstraintSet, Ensemble, Hyperrect, Property, SatResult,
    Status,
};

use crate::config::{Config, ConfigError, FileConfig, Overrides};
use crate::format::{domain_from_csv, load_domain, load_model, model_hash, ParameterEntry, RangeFile, RangeMeta};
use crate::report::{render_table, ReportFile};
use crate::solver::ProcessRunner;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ENVIRONMENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tree-sentinel", version, about = "Verify decision-tree ensembles and extract the input ranges that violate a property")]
pub struct Cli {
    /// TOML config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Solver command, e.g. "z3 -in" (overrides TREE_SENTINEL_SOLVER)
    #[arg(long, global = true)]
    solver: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One solver query: is there an input in the domain that violates the property?
    Verify(VerifyArgs),
    /// Detect every violation range and write them as a filter
    Extract(ExtractArgs),
    /// Input filter operations
    Filter {
        #[command(subcommand)]
        command: FilterCommand,
    },
    /// Enumerate violations exhaustively (integer features only)
    Oracle(OracleArgs),
    /// Time detection on synthetic models and write CSV
    Bench(BenchArgs),
}

#[derive(Debug, Subcommand)]
enum FilterCommand {
    /// Print `deny` if the input lies in a violation range, `allow` otherwise
    Check {
        #[arg(long)]
        ranges: PathBuf,
        /// Input vector, e.g. "[1, 2.5, 3]"
        #[arg(long)]
        input: String,
    },
}

#[derive(Debug, Args)]
struct Inputs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// JSON domain file with per-feature min and max
    #[arg(long, conflicts_with = "domain_from_csv")]
    domain: Option<PathBuf>,
    /// Take the domain from per-column min and max of a CSV with a header row
    #[arg(long)]
    domain_from_csv: Option<PathBuf>,
    #[arg(long)]
    property: Option<String>,
}

#[derive(Debug, Args)]
struct Tuning {
    #[arg(long)]
    r_a: Option<f64>,
    #[arg(long)]
    r_b: Option<f64>,
    #[arg(long)]
    r_c: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-call solver timeout in seconds
    #[arg(long)]
    timeout: Option<f64>,
    /// Total time budget in seconds
    #[arg(long)]
    budget: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    timeout: Option<f64>,
    /// Write each solver script into this directory
    #[arg(long)]
    dump_scripts: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    tuning: Tuning,
    /// Violation-range file to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report to write
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    dump_scripts: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Largest grid to enumerate
    #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
    cap: u64,
    /// Write the violating points as JSON
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, value_delimiter = ',')]
    n_est: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    max_d: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<usize>>,
    /// Worker threads; cells run concurrently, which skews timings
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// CSV destination (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Environment(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Environment(_) => EXIT_ENVIRONMENT,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn env_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Environment(msg.to_string())
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => env_err(e),
            _ => usage(e),
        }
    }
}

impl From<SmtError> for CliError {
    fn from(e: SmtError) -> Self {
        match e {
            SmtError::Property(_) | SmtError::Dimension { .. } => usage(e),
            _ => env_err(e),
        }
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Smt(e) => e.into(),
            DetectError::Extraction(ExtractionError::Smt(e)) => e.into(),
            DetectError::Division(tree_sentinel_core::division::DivisionError::Smt(e)) => e.into(),
            other => usage(other),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| env_err(format!("reading {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| env_err(format!("writing {}: {e}", path.display())))
}

fn overrides(cli: &Cli, inputs: Option<&Inputs>, tuning: Option<&Tuning>) -> Overrides {
    let mut o = Overrides { solver_cmd: cli.solver.clone(), ..Overrides::default() };
    if let Some(i) = inputs {
        o.model = i.model.clone();
        o.domain = i.domain.clone();
        o.property = i.property.clone();
    }
    if let Some(t) = tuning {
        o.r_a = t.r_a;
        o.r_b = t.r_b;
        o.r_c = t.r_c;
        o.seed = t.seed;
        o.per_call_timeout_s = t.timeout;
        o.total_budget_s = t.budget;
    }
    o
}

fn resolve(cli: &Cli, o: Overrides) -> Result<Config, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    Ok(Config::resolve(file, |k| std::env::var(k).ok(), o)?)
}

struct Problem {
    model: Ensemble,
    model_bytes: Vec<u8>,
    domain: Hyperrect,
    property: Property,
    property_text: String,
}

fn load_problem(config: &Config, inputs: &Inputs) -> Result<Problem, CliError> {
    let model_path = config.model.as_deref().ok_or_else(|| usage("no model given (--model)"))?;
    let model_bytes = read(model_path)?;
    let model = load_model(&model_bytes).map_err(|e| usage(format!("{}: {e}", model_path.display())))?;
    let domain = match (&inputs.domain_from_csv, &config.domain) {
        (Some(csv), _) => domain_from_csv(std::io::Cursor::new(read(csv)?), model.features())
            .map_err(|e| usage(format!("{}: {e}", csv.display())))?,
        (None, Some(path)) => {
            load_domain(&read(path)?, &model.kinds()).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(usage("no domain given (--domain or --domain-from-csv)")),
    };
    let property_text = config.property.clone().ok_or_else(|| usage("no property given (--property)"))?;
    let property = parse_property(&property_text).map_err(|e| usage(format!("property: {e}")))?;
    property.bind(model.feature_count()).map_err(|e| usage(format!("property: {e}")))?;
    Ok(Problem { model, model_bytes, domain, property, property_text })
}

fn runner(config: &Config, dump: Option<&PathBuf>) -> Result<ProcessRunner, CliError> {
    let p = &config.parameters;
    let runner = ProcessRunner::new(&config.solver_cmd, p.per_call_timeout, p.total_budget).map_err(env_err)?;
    Ok(match dump {
        Some(dir) => runner.dump_scripts_to(dir),
        None => runner,
    })
}

fn point_text(x: &[tree_sentinel_core::Rational]) -> String {
    format!("[{}]", x.iter().map(format_rational).collect::<Vec<_>>().join(", "))
}

fn reason_text(reason: UnknownReason) -> &'static str {
    match reason {
        UnknownReason::Timeout => "timeout",
        UnknownReason::SolverUnknown => "solver returned unknown",
        UnknownReason::IoFailure => "solver i/o failure",
        UnknownReason::BudgetExhausted => "budget exhausted",
    }
}

fn verify(cli: &Cli, args: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut o = overrides(cli, Some(&args.inputs), None);
    o.per_call_timeout_s = args.timeout;
    let config = resolve(cli, o)?;
    let problem = load_problem(&config, &args.inputs)?;
    let mut runner = runner(&config, args.dump_scripts.as_ref())?;
    let mut verifier = Verifier::new(&problem.model, &problem.property, &mut runner)?;
    let result = verifier.check(&ConstraintSet::within(problem.domain.clone()))?;
    let io = |e: std::io::Error| env_err(e);
    match result {
        SatResult::Unsat => {
            writeln!(out, "unsat").map_err(io)?;
            Ok(EXIT_OK)
        }
        SatResult::Sat { x, y } => {
            writeln!(out, "sat").map_err(io)?;
            writeln!(out, "x = {}", point_text(&x)).map_err(io)?;
            writeln!(out, "y = {}", format_rational(&y)).map_err(io)?;
            Ok(EXIT_VIOLATED)
        }
        SatResult::Unknown(reason) => {
            writeln!(out, "unknown ({})", reason_text(reason)).map_err(io)?;
            Ok(EXIT_ENVIRONMENT)
        }
    }
}

fn extract(cli: &Cli, args: &ExtractArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut o = overrides(cli, Some(&args.inputs), Some(&args.tuning));
    o.out = args.out.clone();
    o.report = args.report.clone();
    let config = resolve(cli, o)?;
    let out_path = config.out.clone().ok_or_else(|| usage("no output file given (--out)"))?;
    let problem = load_problem(&config, &args.inputs)?;
    let mut runner = runner(&config, args.dump_scripts.as_ref())?;
    let started = Instant::now();
    let mut report =
        detect_violation_ranges(&problem.model, &problem.property, &problem.domain, &config.parameters, &mut runner)?;
    report.totals.wall_time = started.elapsed();

    let meta = RangeMeta {
        model_hash: model_hash(&problem.model_bytes),
        property_text: problem.property_text.clone(),
        parameters: ParameterEntry::from(&config.parameters),
    };
    write(&out_path, &RangeFile::new(&report.vranges, meta).to_json())?;
    if let Some(path) = &config.report {
        write(path, &ReportFile::new(&report, &problem.property_text).to_json())?;
    }
    out.write_all(render_table(&report, &problem.property_text).as_bytes()).map_err(env_err)?;
    Ok(match report.status {
        Status::Complete | Status::AbortedBudget => EXIT_OK,
        Status::AbortedUnknown => EXIT_ENVIRONMENT,
    })
}

/// Accepts `[1, 2.5, -3]`, `1,2.5,-3`, or quoted elements.
pub fn parse_point(text: &str) -> Result<Vec<tree_sentinel_core::Rational>, CliError> {
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|v| parse_rational(v.trim().trim_matches('"')).map_err(|e| usage(format!("input: {e}"))))
        .collect()
}

fn filter(ranges: &Path, input: &str, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = RangeFile::from_json(&read(ranges)?).map_err(|e| usage(format!("{}: {e}", ranges.display())))?;
    let boxes = file.boxes().map_err(|e| usage(format!("{}: {e}", ranges.display())))?;
    let x = parse_point(input)?;
    let deny = filter_check(&boxes, &x).map_err(|e| usage(format!("input: {e}")))?;
    writeln!(out, "{}", if deny { "deny" } else { "allow" }).map_err(env_err)?;
    Ok(EXIT_OK)
}

fn oracle(cli: &Cli, args: &OracleArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let config = resolve(cli, overrides(cli, Some(&args.inputs), None))?;
    let problem = load_problem(&config, &args.inputs)?;
    let oracle_err = |e: OracleError| usage(e);
    let grid = GridSpec::from_domain(&problem.domain, &problem.model.kinds(), args.cap).map_err(oracle_err)?;
    let violations = brute_force_violations(&problem.model, &problem.property, &grid).map_err(oracle_err)?;
    writeln!(out, "grid points: {}", grid.size()).map_err(env_err)?;
    writeln!(out, "violations: {}", violations.len()).map_err(env_err)?;
    if let Some(path) = &args.dump {
        let points: Vec<Vec<String>> = violations.iter().map(|p| p.iter().map(format_rational).collect()).collect();
        let doc = serde_json::json!({ "count": violations.len(), "points": points });
        write(path, &format!("{}\n", serde_json::to_string_pretty(&doc).expect("json value serializes")))?;
    }
    Ok(EXIT_OK)
}

fn bench(cli: &Cli, args: &BenchArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut o = overrides(cli, None, Some(&args.tuning));
    o.n_est = args.n_est.clone();
    o.max_d = args.max_d.clone();
    o.s = args.s.clone();
    let config = resolve(cli, o)?;
    config.parameters.validate().map_err(usage)?;
    if [&config.bench.n_est, &config.bench.max_d, &config.bench.s].iter().any(|v| v.contains(&0)) {
        return Err(usage("sweep values must be at least 1"));
    }
    let rows = crate::bench::run_sweep(&config.bench, &config.parameters, &config.solver_cmd, args.jobs)?;
    let mut buf = Vec::new();
    crate::bench::write_csv(&rows, &mut buf).map_err(env_err)?;
    match &args.out {
        Some(path) => write(path, &String::from_utf8_lossy(&buf))?,
        None => out.write_all(&buf).map_err(env_err)?,
    }
    Ok(EXIT_OK)
}

/// Parses `argv` (program name first) and runs the command. Returns the exit
/// status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Verify(args) => verify(&cli, args, out),
        Command::Extract(args) => extract(&cli, args, out),
        Command::Filter { command: FilterCommand::Check { ranges, input } } => filter(ranges, input, out),
        Command::Oracle(args) => oracle(&cli, args, out),
        Command::Bench(args) => bench(&cli, args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
