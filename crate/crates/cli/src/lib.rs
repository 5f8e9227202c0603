//! The `qccp` command line.
//!
//! Exit codes: 0 on success, 1 when a comparison against reference values
//! fails, 2 on invalid input, 3 when a numerical routine fails and 64 on
//! usage errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qccp::classical::{exact_classical_bound, heuristic_classical_bound, ClassicalStrategy, MAX_EXACT_DIM};
use qccp::dataio::{
    load_appendix, parse_strategy, reference_table, serialize_strategy, ParseOptions, Report,
    ReportRow, Strategy, APPENDIX_DIMS,
};
use qccp::game::build_game;
use qccp::optimize::{seesaw_bell, seesaw_qs, Constraint, OptimizationReport, SeesawConfig};
use qccp::strategies::{behavior_from_bell, evaluate_bell, evaluate_qs};
use qccp::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPARISON_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "qccp", version, about = "Payoffs, see-saw optimization and classical bounds for d-dimensional communication games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a strategy file.
    Evaluate(EvaluateArgs),
    /// See-saw over prepare-and-measure strategies.
    OptimizeQs(OptimizeArgs),
    /// See-saw over entanglement-assisted strategies.
    OptimizeBell(OptimizeArgs),
    /// Best classical strategy sending one d-valued message.
    Classical(ClassicalArgs),
    /// Evaluate the shipped published strategies against their reference values.
    VerifyAppendix(VerifyArgs),
    /// Reference values next to values computed here.
    Table(TableArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ConstraintArg {
    None,
    TraceOne,
    Projective,
}

impl From<ConstraintArg> for Constraint {
    fn from(c: ConstraintArg) -> Self {
        match c {
            ConstraintArg::None => Constraint::Unconstrained,
            ConstraintArg::TraceOne => Constraint::TraceOne,
            ConstraintArg::Projective => Constraint::RankOneProjective,
        }
    }
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    strategy: PathBuf,
    /// Expected dimension; a mismatch is an error.
    #[arg(long)]
    dim: Option<usize>,
    /// Rescale POVMs to exact completeness before evaluating.
    #[arg(long)]
    repair: bool,
    /// Compare against the reference value, failing beyond this distance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 200)]
    restarts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "none")]
    constraint: ConstraintArg,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Do not seed restarts from the best classical strategy.
    #[arg(long)]
    no_warm_start: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// Fail when the value falls short of the reference by more than this.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Write the best strategy to this file.
    #[arg(long)]
    save: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ClassicalArgs {
    #[arg(long)]
    dim: usize,
    /// Exhaustive enumeration (d <= 5) instead of hill climbing.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// A dimension in 6..=10, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_appendix_dims)]
    dim: Dims,
    #[arg(long, default_value_t = 0.03)]
    tolerance: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// A dimension in 2..=10, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_table_dims)]
    dim: Dims,
    /// Also run the prepare-and-measure see-saw with this many restarts.
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Debug)]
struct Dims(Vec<usize>);

fn parse_dims(s: &str, lo: usize, hi: usize) -> std::result::Result<Dims, String> {
    if s == "all" {
        return Ok(Dims((lo..=hi).collect()));
    }
    match s.parse::<usize>() {
        Ok(d) if (lo..=hi).contains(&d) => Ok(Dims(vec![d])),
        _ => Err(format!("expected `all` or an integer in {lo}..={hi}")),
    }
}

fn parse_appendix_dims(s: &str) -> std::result::Result<Dims, String> {
    parse_dims(s, *APPENDIX_DIMS.start(), *APPENDIX_DIMS.end())
}

fn parse_table_dims(s: &str) -> std::result::Result<Dims, String> {
    parse_dims(s, 2, 10)
}

/// Failures with their exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric { .. } => EXIT_NUMERIC,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> CliResult<i32> {
    let (report, output) = match command {
        Command::Evaluate(a) => (evaluate(&a)?, a.output),
        Command::OptimizeQs(a) => (optimize(&a, false)?, a.output),
        Command::OptimizeBell(a) => (optimize(&a, true)?, a.output),
        Command::Classical(a) => (classical(&a)?, a.output),
        Command::VerifyAppendix(a) => (verify(&a)?, a.output),
        Command::Table(a) => (table(&a)?, a.output),
    };
    let text = render(&report, output.format)?;
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| invalid(format!("cannot write output: {e}")))?;
    if let Some(path) = &output.out {
        write_file(path, &text)?;
    }
    Ok(if report.passed == Some(false) {
        EXIT_COMPARISON_FAILED
    } else {
        EXIT_OK
    })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(invalid("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn check_tolerance(t: Option<f64>) -> CliResult<()> {
    match t {
        Some(v) if !(v >= 0.0 && v.is_finite()) => Err(invalid("--tolerance must be a non-negative number")),
        _ => Ok(()),
    }
}

fn evaluate(a: &EvaluateArgs) -> CliResult<Report> {
    check_tolerance(a.tolerance)?;
    let started = Instant::now();
    let text = std::fs::read_to_string(&a.strategy)
        .map_err(|e| invalid(format!("cannot read {}: {e}", a.strategy.display())))?;
    let opts = ParseOptions {
        repair: a.repair,
        ..ParseOptions::default()
    };
    let parsed = parse_strategy(&text, &opts)?;
    let (d, method, value, reference) = match &parsed.strategy {
        Strategy::PrepareMeasure(s) => {
            let d = s.dim();
            let v = evaluate_qs(&build_game(d)?, s)?;
            (d, "evaluate-qs", v, reference_table().row(d).and_then(|r| r.qs_best()))
        }
        Strategy::Bell(s) => {
            let d = s.dim();
            let v = evaluate_bell(&build_game(d)?, &behavior_from_bell(s)?)?;
            (d, "evaluate-bell", v, reference_table().row(d).and_then(|r| r.bell_max))
        }
    };
    if let Some(expected) = a.dim {
        if expected != d {
            return Err(invalid(format!("strategy has dimension {d}, expected {expected}")));
        }
    }
    let mut row = ReportRow::new(d, method, value, reference);
    row.wall_ms = elapsed_ms(started);
    let passed = match (a.tolerance, row.delta) {
        (Some(t), Some(delta)) => Some(delta.abs() <= t),
        _ => None,
    };
    Ok(Report {
        command: "evaluate".into(),
        rows: vec![row],
        tolerance: a.tolerance,
        passed,
        details: Some(json!({
            "completeness_defect": parsed.completeness_defect,
            "repaired": parsed.repaired,
        })),
    })
}

fn summary<S>(r: &OptimizationReport<S>) -> serde_json::Value {
    let failed = r.traces.iter().filter(|t| t.value.is_none()).count();
    let max_gap = r.certificate_gaps().fold(0.0f64, f64::max);
    json!({
        "best_restart": r.best_restart,
        "failed_restarts": failed,
        "max_certificate_gap": max_gap,
    })
}

fn optimize(a: &OptimizeArgs, bell: bool) -> CliResult<Report> {
    check_tolerance(a.tolerance)?;
    let started = Instant::now();
    let game = build_game(a.dim)?;
    let constraint = Constraint::from(a.constraint);
    let cfg = SeesawConfig {
        restarts: a.restarts,
        max_iters: a.max_iters,
        seed: a.seed,
        constraint,
        classical_warm_start: !a.no_warm_start,
        threads: a.threads,
        ..SeesawConfig::default()
    };
    let row_ref = reference_table().row(a.dim);
    let (method, value, reference, details, strategy) = if bell {
        let r = seesaw_bell(&game, &cfg)?;
        let reference = row_ref.and_then(|x| x.bell_max);
        (
            "seesaw-bell",
            r.best_value,
            reference,
            summary(&r),
            Strategy::Bell(r.best_strategy),
        )
    } else {
        let r = seesaw_qs(&game, &cfg)?;
        let reference = match constraint {
            Constraint::Unconstrained => row_ref.and_then(|x| x.qs_best()),
            _ => row_ref.and_then(|x| x.qs_trace_one),
        };
        (
            "seesaw-qs",
            r.best_value,
            reference,
            summary(&r),
            Strategy::PrepareMeasure(r.best_strategy),
        )
    };
    let method = match constraint {
        Constraint::Unconstrained => method.to_string(),
        Constraint::TraceOne => format!("{method}-trace-one"),
        Constraint::RankOneProjective => format!("{method}-projective"),
    };
    if let Some(path) = &a.save {
        write_file(path, &serialize_strategy(&strategy)?)?;
    }
    let mut row = ReportRow::new(a.dim, method, value, reference);
    row.restarts = Some(a.restarts);
    row.seed = Some(a.seed);
    row.wall_ms = elapsed_ms(started);
    let passed = match (a.tolerance, row.delta) {
        (Some(t), Some(delta)) => Some(delta >= -t),
        _ => None,
    };
    Ok(Report {
        command: if bell { "optimize-bell" } else { "optimize-qs" }.into(),
        rows: vec![row],
        tolerance: a.tolerance,
        passed,
        details: Some(details),
    })
}

fn witness_json(w: &ClassicalStrategy) -> serde_json::Value {
    let d = w.dim();
    let enc: Vec<[usize; 2]> = (0..d).map(|x0| [w.encode(x0, 0), w.encode(x0, 1)]).collect();
    let dec: Vec<[usize; 2]> = (0..d).map(|m| [w.decode(m, 0), w.decode(m, 1)]).collect();
    json!({ "encoding": enc, "decoding": dec })
}

fn classical_value(d: usize, exact: bool, restarts: usize, seed: u64) -> CliResult<(String, f64, ClassicalStrategy)> {
    let game = build_game(d)?;
    if exact {
        let (v, w) = exact_classical_bound(&game)?;
        Ok(("classical-exact".into(), v, w))
    } else {
        let (v, w) = heuristic_classical_bound(&game, restarts, seed)?;
        Ok(("classical-heuristic".into(), v, w))
    }
}

fn classical(a: &ClassicalArgs) -> CliResult<Report> {
    let started = Instant::now();
    if a.restarts == 0 {
        return Err(invalid("--restarts must be at least 1"));
    }
    let (method, value, witness) = with_threads(a.threads, || classical_value(a.dim, a.exact, a.restarts, a.seed))??;
    let mut row = ReportRow::new(a.dim, method, value, None);
    if !a.exact {
        row.restarts = Some(a.restarts);
        row.seed = Some(a.seed);
    }
    row.wall_ms = elapsed_ms(started);
    Ok(Report {
        command: "classical".into(),
        rows: vec![row],
        tolerance: None,
        passed: None,
        details: Some(witness_json(&witness)),
    })
}

fn verify(a: &VerifyArgs) -> CliResult<Report> {
    check_tolerance(Some(a.tolerance))?;
    let mut rows = Vec::new();
    let mut passed = true;
    for &d in &a.dim.0 {
        let started = Instant::now();
        let s = load_appendix(d)?;
        let v = evaluate_qs(&build_game(d)?, &s)?;
        let reference = reference_table().row(d).and_then(|r| r.qs_lower);
        let mut row = ReportRow::new(d, "appendix", v, reference);
        row.wall_ms = elapsed_ms(started);
        passed &= row.delta.is_some_and(|x| x.abs() <= a.tolerance);
        rows.push(row);
    }
    Ok(Report {
        command: "verify-appendix".into(),
        rows,
        tolerance: Some(a.tolerance),
        passed: Some(passed),
        details: None,
    })
}

fn table(a: &TableArgs) -> CliResult<Report> {
    let t = reference_table();
    let mut rows = Vec::new();
    for &d in &a.dim.0 {
        let r = t.row(d).expect("dimensions are range-checked");
        if APPENDIX_DIMS.contains(&d) {
            let started = Instant::now();
            let v = evaluate_qs(&build_game(d)?, &load_appendix(d)?)?;
            let mut row = ReportRow::new(d, "appendix", v, r.qs_lower);
            row.wall_ms = elapsed_ms(started);
            rows.push(row);
        }
        let started = Instant::now();
        let exact = d <= MAX_EXACT_DIM;
        let (method, v, _) = with_threads(a.threads, || classical_value(d, exact, 50, a.seed))??;
        let mut row = ReportRow::new(d, method, v, None);
        if !exact {
            row.restarts = Some(50);
            row.seed = Some(a.seed);
        }
        row.wall_ms = elapsed_ms(started);
        rows.push(row);
        if let Some(restarts) = a.restarts {
            let started = Instant::now();
            let cfg = SeesawConfig {
                restarts,
                seed: a.seed,
                threads: a.threads,
                ..SeesawConfig::default()
            };
            let rep = seesaw_qs(&build_game(d)?, &cfg)?;
            let mut row = ReportRow::new(d, "seesaw-qs", rep.best_value, r.qs_best());
            row.restarts = Some(restarts);
            row.seed = Some(a.seed);
            row.wall_ms = elapsed_ms(started);
            rows.push(row);
        }
    }
    let reference: Vec<_> = a.dim.0.iter().filter_map(|&d| t.row(d)).collect();
    Ok(Report {
        command: "table".into(),
        rows,
        tolerance: None,
        passed: None,
        details: Some(json!({ "reference": reference })),
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("-".into(), |x| format!("{x:.digits$}"))
}

fn render(report: &Report, format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv()?,
        Format::Table => render_table(report),
    })
}

fn render_table(report: &Report) -> String {
    let mut out = String::new();
    if report.command == "table" {
        out += &reference_block(report);
    }
    out += &format!(
        "{:>3}  {:<26} {:>10} {:>10} {:>10} {:>8} {:>6} {:>8}\n",
        "d", "method", "value", "reference", "delta", "restarts", "seed", "wall_ms"
    );
    for r in &report.rows {
        out += &format!(
            "{:>3}  {:<26} {:>10.6} {:>10} {:>10} {:>8} {:>6} {:>8}\n",
            r.d,
            r.method,
            r.value,
            opt(r.reference, 4),
            r.delta.map_or("-".into(), |x| format!("{x:+.6}")),
            r.restarts.map_or("-".into(), |x| x.to_string()),
            r.seed.map_or("-".into(), |x| x.to_string()),
            r.wall_ms
        );
    }
    if report.command == "classical" {
        if let Some(details) = &report.details {
            out += &witness_block(details);
        }
    }
    if let Some(passed) = report.passed {
        let tol = report.tolerance.map_or(String::new(), |t| format!(" (tolerance {t})"));
        out += &format!("{}{tol}\n", if passed { "PASS" } else { "FAIL" });
    }
    out
}

fn reference_block(report: &Report) -> String {
    let mut out = format!(
        "{:>3}  {:>8} {:>8} {:>8} {:>8} {:>9}\n",
        "d", "qs", "qs_prior", "bell", "ml", "trace_one"
    );
    let dims: Vec<usize> = report
        .details
        .as_ref()
        .and_then(|v| v["reference"].as_array())
        .map(|rows| rows.iter().filter_map(|r| r["d"].as_u64()).map(|d| d as usize).collect())
        .unwrap_or_default();
    for d in dims {
        let r = reference_table().row(d).expect("reference rows exist");
        out += &format!(
            "{:>3}  {:>8} {:>8} {:>8} {:>8} {:>9}\n",
            d,
            opt(r.qs_lower, 4),
            opt(r.qs_lower_prior, 4),
            opt(r.bell_max, 4),
            opt(r.ml_max, 4),
            opt(r.qs_trace_one, 4)
        );
    }
    out.push('\n');
    out
}

fn witness_block(details: &serde_json::Value) -> String {
    let pairs = |key: &str| -> Vec<String> {
        details[key]
            .as_array()
            .map(|rows| {
                rows.iter()
                    .map(|p| format!("{} {}", p[0], p[1]))
                    .collect()
            })
            .unwrap_or_default()
    };
    let mut out = String::from("\nencoding m(x0, x), columns x = 0 1\n");
    for (x0, p) in pairs("encoding").iter().enumerate() {
        out += &format!("  x0 = {x0:>2}: {p}\n");
    }
    out += "decoding g(m, y), columns y = 0 1\n";
    for (m, p) in pairs("decoding").iter().enumerate() {
        out += &format!("  m  = {m:>2}: {p}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let numeric = Error::Numeric {
            message: "stalled".into(),
            residual: 1.0,
        };
        assert_eq!(Failure::from(numeric).code, EXIT_NUMERIC);
        assert_eq!(Failure::from(Error::Validation("x".into())).code, EXIT_INVALID);
        assert_eq!(Failure::from(Error::Capability("x".into())).code, EXIT_INVALID);
    }

    #[test]
    fn dimension_lists() {
        assert_eq!(parse_table_dims("all").unwrap().0, (2..=10).collect::<Vec<_>>());
        assert_eq!(parse_appendix_dims("8").unwrap().0, vec![8]);
        assert!(parse_appendix_dims("11").is_err());
        assert!(parse_table_dims("two").is_err());
    }
}
