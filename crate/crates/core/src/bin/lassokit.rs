//! Command-line surface: instance generation, path computation, coefficient
//! bounds, active-set enumeration, KKT checking, and direct solves.
//!
//! Each invocation prints one JSON document on stdout (or to --out);
//! diagnostics go to stderr. Exit codes: 0 success/pass, 1 usage error,
//! 2 numerical failure, 3 check failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use lassokit::error::Error;
use lassokit::gen::InstanceKind;
use lassokit::kkt::ProblemInstance;
use lassokit::report::{
    self, BoundsDoc, CheckDoc, EnumerateDoc, InstanceDoc, PathDoc, SolveDoc,
};
use lassokit::solvers::{LossKind, LossSpec};
use lassokit::{gen, kkt, larspath, polytope, solvers};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "lassokit",
    version,
    about = "Lasso path, uniqueness, and solution-polytope analysis for arbitrary design matrices"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct InstanceArgs {
    /// JSON instance file {"X": [[...]], "y": [...], "lambda": ...}.
    #[arg(long, conflicts_with_all = ["design", "response"])]
    instance: Option<PathBuf>,
    /// Design matrix CSV (no header, one row per line).
    #[arg(long, requires = "response")]
    design: Option<PathBuf>,
    /// Response CSV (one value per line).
    #[arg(long, requires = "design")]
    response: Option<PathBuf>,
    /// Override (or supply, for CSV input) the tuning parameter; CSV input
    /// without --lambda defaults to 0.5 * ||X^T y||_inf.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct OutArg {
    /// Write the JSON document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a deterministic problem instance.
    Gen {
        /// One of: gaussian, duplicated, averaged-column, binary-design.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compute the full LARS lasso path.
    Path {
        #[command(flatten)]
        input: InstanceArgs,
        /// Smallest lambda the path is computed down to.
        #[arg(long, default_value_t = 0.0)]
        lambda_min: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Per-variable coefficient bounds over all solutions.
    Bounds {
        #[command(flatten)]
        input: InstanceArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Enumerate every active set realizable by a solution.
    Enumerate {
        #[command(flatten)]
        input: InstanceArgs,
        /// Maximum equicorrelation-set size accepted by the enumeration.
        #[arg(long, default_value_t = polytope::DEFAULT_ENUM_CAP)]
        cap: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Verify the KKT conditions for a candidate solution.
    Check {
        #[command(flatten)]
        input: InstanceArgs,
        /// Candidate coefficients: JSON array or one value per line.
        #[arg(long)]
        beta: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Solve the instance with an independent solver.
    Solve {
        #[command(flatten)]
        input: InstanceArgs,
        /// One of: cd, en (needs --lambda2), proxgrad (needs --loss).
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Ridge penalty for the elastic net.
        #[arg(long)]
        lambda2: Option<f64>,
        /// One of: squared, logistic, poisson.
        #[arg(long)]
        loss: Option<String>,
        /// Skip the typical response-range validation for logistic/poisson.
        #[arg(long)]
        allow_any_response: bool,
        #[command(flatten)]
        out: OutArg,
    },
}

fn main() -> ExitCode {
    check_thread_cap();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; everything else is usage.
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let (code, kind) = classify(&e);
            let diag = serde_json::json!({ "error": e.to_string(), "kind": kind });
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}

/// LASSOKIT_THREADS caps internal parallelism; all current analyses run
/// single-threaded, so any valid value is accepted as-is.
fn check_thread_cap() {
    if let Ok(v) = std::env::var("LASSOKIT_THREADS") {
        if v.parse::<usize>().map(|t| t >= 1) != Ok(true) {
            eprintln!("warning: ignoring invalid LASSOKIT_THREADS value '{v}'");
        }
    }
}

fn classify(e: &Error) -> (u8, &'static str) {
    match e {
        Error::Input(_) | Error::Dimension(_) | Error::Unsupported(_) | Error::Range(_) => {
            (EXIT_USAGE, "usage")
        }
        Error::Capability(_) => (EXIT_USAGE, "capability"),
        Error::NonConvergence(_) | Error::Cycling(_) | Error::Internal(_) => {
            (EXIT_NUMERICAL, "numerical")
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Gen { kind, n, p, seed, out } => {
            let kind: InstanceKind = kind.parse()?;
            let inst = gen::generate(kind, n, p, seed)?;
            emit(&InstanceDoc::from_instance(&inst), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Path { input, lambda_min, out } => {
            let inst = load_instance(&input)?;
            let path = larspath::lars_path(&inst.x, &inst.y, lambda_min)?;
            emit(&PathDoc::from_path(&path), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Bounds { input, out } => {
            let inst = load_instance(&input)?;
            let spec = polytope::solution_polytope(&inst)?;
            let report = polytope::coefficient_bounds(&spec)?;
            emit(&BoundsDoc::from_report(&report), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Enumerate { input, cap, out } => {
            let inst = load_instance(&input)?;
            let spec = polytope::solution_polytope(&inst)?;
            let sets = polytope::enumerate_active_sets(&spec, cap)?;
            let dist = polytope::active_subspace_check(&inst, &sets)?;
            emit(&EnumerateDoc::new(&sets, dist <= 1e-8), &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check { input, beta, tol, out } => {
            let inst = load_instance(&input)?;
            let beta = read_vector(&beta, inst.p())?;
            let report = kkt::check_kkt(&inst, &beta, tol)?;
            emit(&CheckDoc::from_report(&report), &out)?;
            if report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!(
                    "KKT check failed: stationarity gap {:.3e}, sign violation {:.3e} (tol {tol:.3e})",
                    report.stationarity_gap, report.sign_violation
                );
                Ok(ExitCode::from(EXIT_CHECK_FAILED))
            }
        }
        Cmd::Solve { input, method, tol, lambda2, loss, allow_any_response, out } => {
            let inst = load_instance(&input)?;
            let cert = match method.as_str() {
                "cd" => solvers::coordinate_descent(&inst, tol)?,
                "en" => {
                    let lambda2 = lambda2.ok_or_else(|| {
                        Error::Input("method 'en' requires --lambda2".into())
                    })?;
                    solvers::elastic_net(&inst.x, &inst.y, inst.lambda, lambda2, tol)?
                }
                "proxgrad" => {
                    let loss = loss.ok_or_else(|| {
                        Error::Input("method 'proxgrad' requires --loss".into())
                    })?;
                    let kind = match loss.as_str() {
                        "squared" => LossKind::Squared,
                        "logistic" => LossKind::Logistic,
                        "poisson" => LossKind::Poisson,
                        other => {
                            return Err(Error::Input(format!(
                                "unknown loss '{other}' (expected squared, logistic, or poisson)"
                            )))
                        }
                    };
                    let mut spec = LossSpec::new(kind, inst.y.clone())
                        .or_else(|e| {
                            if allow_any_response {
                                Ok(LossSpec {
                                    kind,
                                    response: inst.y.clone(),
                                    allow_any_response: true,
                                })
                            } else {
                                Err(e)
                            }
                        })?;
                    spec.allow_any_response = allow_any_response;
                    solvers::prox_grad_l1(&spec, &inst.x, inst.lambda, tol)?
                }
                other => {
                    return Err(Error::Input(format!(
                        "unknown method '{other}' (expected cd, en, or proxgrad)"
                    )))
                }
            };
            emit(&SolveDoc::from_certificate(&method, &cert), &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn emit<T: serde::Serialize>(doc: &T, out: &OutArg) -> Result<(), Error> {
    let json = report::to_json_string(doc)?;
    match &out.out {
        Some(path) => fs::write(path, format!("{json}\n"))
            .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(args: &InstanceArgs) -> Result<ProblemInstance, Error> {
    let mut inst = match (&args.instance, &args.design, &args.response) {
        (Some(path), None, None) => {
            let text = read_text(path)?;
            let doc: InstanceDoc = serde_json::from_str(&text).map_err(|e| {
                Error::Input(format!(
                    "{}: malformed instance JSON at line {}: {e}",
                    path.display(),
                    e.line()
                ))
            })?;
            doc.into_instance()?
        }
        (None, Some(design), Some(response)) => {
            let x = read_design_csv(design)?;
            let y = read_response_csv(response)?;
            if y.len() != x.nrows() {
                return Err(Error::Dimension(format!(
                    "{}: {} response values but the design has {} rows",
                    response.display(),
                    y.len(),
                    x.nrows()
                )));
            }
            let lambda = args
                .lambda
                .unwrap_or_else(|| 0.5 * (x.transpose() * &y).amax());
            ProblemInstance::new(x, y, lambda)?
        }
        _ => {
            return Err(Error::Input(
                "provide either --instance FILE or --design FILE with --response FILE".into(),
            ))
        }
    };
    if let Some(lambda) = args.lambda {
        inst = inst.with_lambda(lambda);
    }
    Ok(inst)
}

fn read_design_csv(path: &Path) -> Result<DMatrix<f64>, Error> {
    let text = read_text(path)?;
    let mut rows: Vec<Vec<f64>> = vec![];
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = vec![];
        for field in line.split(',') {
            row.push(field.trim().parse::<f64>().map_err(|e| {
                Error::Input(format!(
                    "{}: line {}: bad number '{}': {e}",
                    path.display(),
                    lineno + 1,
                    field.trim()
                ))
            })?);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Input(format!(
                    "{}: line {}: {} fields, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Input(format!("{}: empty design", path.display())));
    }
    let (n, p) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn read_response_csv(path: &Path) -> Result<DVector<f64>, Error> {
    let text = read_text(path)?;
    let mut vals = vec![];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        vals.push(line.parse::<f64>().map_err(|e| {
            Error::Input(format!(
                "{}: line {}: bad number '{line}': {e}",
                path.display(),
                lineno + 1
            ))
        })?);
    }
    Ok(DVector::from_vec(vals))
}

/// Candidate coefficient vectors: a JSON array of numbers, or one value per
/// line.
fn read_vector(path: &Path, expected_len: usize) -> Result<DVector<f64>, Error> {
    let text = read_text(path)?;
    let trimmed = text.trim();
    let vals: Vec<f64> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| {
            Error::Input(format!(
                "{}: malformed JSON array at line {}: {e}",
                path.display(),
                e.line()
            ))
        })?
    } else {
        let mut vals = vec![];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            vals.push(line.parse::<f64>().map_err(|e| {
                Error::Input(format!(
                    "{}: line {}: bad number '{line}': {e}",
                    path.display(),
                    lineno + 1
                ))
            })?);
        }
        vals
    };
    if vals.len() != expected_len {
        return Err(Error::Dimension(format!(
            "{}: {} coefficients but the design has {} columns",
            path.display(),
            vals.len(),
            expected_len
        )));
    }
    Ok(DVector::from_vec(vals))
}
