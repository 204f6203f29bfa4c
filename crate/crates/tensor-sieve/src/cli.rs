//! Command-line front end: `fit`, `predict`, `simulate`, `index`, `bench`.
//!
//! Exit codes: 0 on success, 2 on bad input (including argument parse
//! errors), 3 when the solver fails to converge and `--allow-nonconverged`
//! is absent. Every run echoes its fully-resolved configuration as one JSON
//! line on stderr. CSV outputs begin with a `# <RFC3339>` timestamp comment
//! unless `--no-timestamp` is given.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::basis::BasisKind;
use crate::error::{Error, Result};
use crate::index::{generate_index_matrix, index_matrix_for_count, IndexMatrix};
use crate::model::{
    fit_sieve, load_model, predict, save_model, CvConfig, Dataset, Estimator, FitConfig,
};
use crate::simulate::{run_methods, Method, RunConfig, RunRecord, SimulationSpec, TruthKind};

#[derive(Parser)]
#[command(
    name = "tensor-sieve",
    version,
    about = "Penalized sieve regression on tensor product bases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Machine-readable JSON output instead of the human summary.
    #[arg(long, global = true)]
    json: bool,

    /// Omit the timestamp comment from CSV outputs.
    #[arg(long, global = true)]
    no_timestamp: bool,

    /// Cap the worker thread count (env SIEVE_THREADS is the fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a sieve model to a CSV dataset and write it as JSON.
    Fit(FitArgs),
    /// Evaluate a saved model on a CSV dataset.
    Predict(PredictArgs),
    /// Compare estimators on synthetic data (no cross-validation by default).
    Simulate(SimArgs),
    /// List frequency tuples of the canonical basis order.
    Index(IndexArgs),
    /// As `simulate`, with 5-fold cross-validation by default.
    Bench(SimArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Training data: CSV with a header row.
    #[arg(long)]
    data: PathBuf,

    /// Name of the outcome column; all other columns are features.
    #[arg(long)]
    outcome: String,

    #[arg(long, default_value = "cosine")]
    basis: String,

    /// Interaction cap D' (0 = min(2, d)).
    #[arg(long, default_value_t = 0)]
    dprime: usize,

    /// Basis count (0 = default rule).
    #[arg(long = "J", default_value_t = 0)]
    j: usize,

    /// Penalty (0 = default rule sqrt(ln(J)/n)).
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,

    /// ols or lasso.
    #[arg(long, default_value = "lasso")]
    estimator: String,

    /// Select (J, lambda) by k-fold cross-validation (0 = off).
    #[arg(long, default_value_t = 0)]
    cv_folds: usize,

    /// Penalty path length for cross-validation.
    #[arg(long, default_value_t = 20)]
    cv_lambda_grid: usize,

    /// Comma-separated candidate basis counts for cross-validation.
    #[arg(long, value_delimiter = ',')]
    cv_j_grid: Vec<usize>,

    /// Fraction of rows held out for reporting (0 = none).
    #[arg(long, default_value_t = 0.0)]
    holdout: f64,

    /// Seed for the holdout split and fold assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 1e-7)]
    tol: f64,

    #[arg(long, default_value_t = 10_000)]
    max_sweeps: usize,

    /// Leave the intercept term unpenalized.
    #[arg(long)]
    no_penalize_intercept: bool,

    /// Write the model even if the solver did not converge.
    #[arg(long)]
    allow_nonconverged: bool,

    /// Output model path.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Saved model JSON.
    #[arg(long)]
    model: PathBuf,

    /// Input data: CSV with a header row.
    #[arg(long)]
    data: PathBuf,

    /// Outcome column to drop from the input, when present in the file.
    #[arg(long)]
    outcome: Option<String>,

    /// Predictions CSV path.
    #[arg(long, default_value = "predictions.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SimArgs {
    /// poly, cos, or interaction.
    #[arg(long)]
    truth: String,

    /// Ambient dimension.
    #[arg(long)]
    d: usize,

    /// Active dimension (the truth reads the first D coordinates).
    #[arg(long = "D")]
    big_d: usize,

    /// Training sample size.
    #[arg(long)]
    n: usize,

    #[arg(long, default_value_t = 2000)]
    n_test: usize,

    #[arg(long, default_value_t = 30.0)]
    snr: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 10)]
    replicates: usize,

    /// Comma-separated subset of sieve-ols, sieve-lasso, sieve-additive,
    /// krr, krr-oracle.
    #[arg(long, value_delimiter = ',', default_value = "sieve-lasso")]
    methods: Vec<String>,

    /// Interaction cap for the sieve methods (0 = min(2, d)).
    #[arg(long, default_value_t = 0)]
    dprime: usize,

    #[arg(long, default_value = "cosine")]
    basis: String,

    /// Cross-validation folds; omitted means the subcommand default
    /// (simulate: 0, bench: 5).
    #[arg(long)]
    cv_folds: Option<usize>,

    /// Penalty path length for cross-validation.
    #[arg(long, default_value_t = 20)]
    lambda_grid: usize,

    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct IndexSpanArgs {
    /// Emit every tuple with magnitude at most this product.
    #[arg(long)]
    max_prod: Option<u64>,

    /// Emit exactly this many rows of the canonical order.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    d: usize,

    #[arg(long)]
    dprime: usize,

    #[command(flatten)]
    span: IndexSpanArgs,

    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Runs the CLI on explicit arguments and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version exit 0; usage problems exit 2
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return 2;
    }
    let outcome = match &cli.command {
        Command::Fit(args) => run_fit(&cli, args),
        Command::Predict(args) => run_predict(&cli, args),
        Command::Simulate(args) => run_simulate(&cli, args, false),
        Command::Bench(args) => run_simulate(&cli, args, true),
        Command::Index(args) => run_index(&cli, args),
    };
    match outcome {
        Ok(()) => 0,
        Err(Error::NotConverged) => {
            eprintln!("error: {}", Error::NotConverged);
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SIEVE_THREADS") {
            Ok(raw) => Some(raw.parse::<usize>().map_err(|_| {
                Error::InvalidArgument(format!(
                    "SIEVE_THREADS must be a positive integer, got '{raw}'"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err(Error::InvalidArgument("thread count must be >= 1".into()));
        }
        // a second init attempt (same process) keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn timestamp_line(cli: &Cli) -> String {
    if cli.no_timestamp {
        String::new()
    } else {
        format!(
            "# {}\n",
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        )
    }
}

fn write_text(target: Option<&Path>, content: &str) -> Result<()> {
    match target {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

/// Reads a headered CSV into (column names, numeric matrix).
fn read_csv_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}: no header row",
            path.display()
        )));
    }
    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::InvalidArgument(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                line + 1,
                record.len(),
                headers.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let parsed: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "{}: row {}, column '{}': cannot parse '{}' as a number",
                    path.display(),
                    line + 1,
                    headers[col],
                    field
                ))
            })?;
            values.push(parsed);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::InvalidArgument(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let matrix = Array2::from_shape_vec((rows, headers.len()), values)
        .expect("row-major fill matches the shape");
    Ok((headers, matrix))
}

/// Splits a CSV matrix into features and the named outcome column.
fn split_outcome(
    path: &Path,
    headers: &[String],
    matrix: &Array2<f64>,
    outcome: &str,
) -> Result<(Array2<f64>, Array1<f64>)> {
    let target = headers.iter().position(|h| h == outcome).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "outcome column '{}' not found in {} (columns: {})",
            outcome,
            path.display(),
            headers.join(", ")
        ))
    })?;
    if headers.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{}: need at least one feature column besides '{}'",
            path.display(),
            outcome
        )));
    }
    let keep: Vec<usize> = (0..headers.len()).filter(|&c| c != target).collect();
    let features = matrix.select(Axis(1), &keep);
    let y = matrix.column(target).to_owned();
    Ok((features, y))
}

fn parse_basis(raw: &str) -> Result<BasisKind> {
    raw.parse()
}

fn parse_estimator(raw: &str) -> Result<Estimator> {
    raw.parse()
}

fn population_r2(preds: &Array1<f64>, y: &Array1<f64>) -> (f64, Option<f64>) {
    let m = y.len() as f64;
    let mse = preds
        .iter()
        .zip(y.iter())
        .map(|(p, v)| (p - v) * (p - v))
        .sum::<f64>()
        / m;
    let mean = y.sum() / m;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    let r2 = if var > 0.0 { Some(1.0 - mse / var) } else { None };
    (mse, r2)
}

fn run_fit(cli: &Cli, args: &FitArgs) -> Result<()> {
    let basis = parse_basis(&args.basis)?;
    let estimator = parse_estimator(&args.estimator)?;
    if !(0.0..1.0).contains(&args.holdout) {
        return Err(Error::InvalidArgument(format!(
            "holdout must lie in [0, 1), got {}",
            args.holdout
        )));
    }

    let (headers, matrix) = read_csv_matrix(&args.data)?;
    let (features, y) = split_outcome(&args.data, &headers, &matrix, &args.outcome)?;

    // deterministic holdout split
    let n = features.nrows();
    let held = ((n as f64) * args.holdout).round() as usize;
    let (train, holdout_set) = if held > 0 {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(args.seed));
        let (held_idx, train_idx) = idx.split_at(held);
        let mut held_idx = held_idx.to_vec();
        let mut train_idx = train_idx.to_vec();
        held_idx.sort_unstable();
        train_idx.sort_unstable();
        let train = Dataset::new(
            features.select(Axis(0), &train_idx),
            y.select(Axis(0), &train_idx),
        )?;
        let held = Dataset::new(
            features.select(Axis(0), &held_idx),
            y.select(Axis(0), &held_idx),
        )?;
        (train, Some(held))
    } else {
        (Dataset::new(features, y)?, None)
    };

    let cfg = FitConfig {
        basis,
        estimator,
        d_prime: args.dprime,
        j: args.j,
        lambda: args.lambda,
        cv: if args.cv_folds >= 2 {
            Some(CvConfig {
                folds: args.cv_folds,
                lambda_grid: args.cv_lambda_grid,
                j_grid: args.cv_j_grid.clone(),
                seed: args.seed,
            })
        } else {
            None
        },
        penalize_intercept: !args.no_penalize_intercept,
        tol: args.tol,
        max_sweeps: args.max_sweeps,
    };
    let model = fit_sieve(&train, &cfg)?;

    eprintln!(
        "{}",
        json!({
            "command": "fit",
            "data": args.data.display().to_string(),
            "outcome": args.outcome,
            "basis": basis.to_string(),
            "estimator": estimator.to_string(),
            "d_prime": model.d_prime(),
            "j": model.j(),
            "lambda": model.meta().lambda,
            "cv_folds": args.cv_folds,
            "holdout": args.holdout,
            "seed": args.seed,
            "out": args.out.display().to_string(),
        })
    );

    if !model.meta().converged && !args.allow_nonconverged {
        return Err(Error::NotConverged);
    }

    // same code path as `predict`: reproduces the in-sample fit bit for bit
    let fitted = predict(&model, train.features())?;
    let train_mse = fitted
        .iter()
        .zip(train.outcome().iter())
        .map(|(p, v)| (p - v) * (p - v))
        .sum::<f64>()
        / train.n() as f64;

    let holdout_metrics = match &holdout_set {
        Some(held) => {
            let preds = predict(&model, held.features())?;
            Some(population_r2(&preds, &held.outcome().to_owned()))
        }
        None => None,
    };

    save_model(&model, &args.out)?;

    if cli.json {
        println!(
            "{}",
            json!({
                "training_mse": train_mse,
                "holdout_mse": holdout_metrics.map(|(mse, _)| mse),
                "holdout_r2": holdout_metrics.and_then(|(_, r2)| r2),
                "j": model.j(),
                "lambda": model.meta().lambda,
                "converged": model.meta().converged,
                "out": args.out.display().to_string(),
            })
        );
    } else {
        println!("training mse: {train_mse}");
        if let Some((mse, r2)) = holdout_metrics {
            println!("holdout mse: {mse}");
            match r2 {
                Some(v) => println!("holdout r2: {v}"),
                None => println!("holdout r2: undefined (constant outcome)"),
            }
        }
        if !model.meta().converged {
            println!("warning: solver did not converge; model written anyway");
        }
        println!("wrote model to {}", args.out.display());
    }
    Ok(())
}

fn run_predict(cli: &Cli, args: &PredictArgs) -> Result<()> {
    eprintln!(
        "{}",
        json!({
            "command": "predict",
            "model": args.model.display().to_string(),
            "data": args.data.display().to_string(),
            "outcome": args.outcome,
            "out": args.out.display().to_string(),
        })
    );

    let model = load_model(&args.model)?;
    let (headers, matrix) = read_csv_matrix(&args.data)?;
    let features = match &args.outcome {
        Some(name) => split_outcome(&args.data, &headers, &matrix, name)?.0,
        None => matrix,
    };
    let preds = predict(&model, features.view())?;

    let mut content = timestamp_line(cli);
    content.push_str("prediction\n");
    for p in preds.iter() {
        let _ = writeln!(content, "{p}");
    }
    std::fs::write(&args.out, content)?;

    if cli.json {
        println!(
            "{}",
            json!({"rows": preds.len(), "out": args.out.display().to_string()})
        );
    } else {
        println!("wrote {} predictions to {}", preds.len(), args.out.display());
    }
    Ok(())
}

fn records_to_csv(records: &[RunRecord], header_comment: &str) -> String {
    let mut out = String::from(header_comment);
    out.push_str("method,truth,d,D,n,snr,seed,mse,r2\n");
    for r in records {
        let r2 = r.r2.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.method, r.truth, r.d, r.big_d, r.n, r.snr, r.seed, r.mse, r2
        );
    }
    out
}

fn run_simulate(cli: &Cli, args: &SimArgs, bench: bool) -> Result<()> {
    let truth: TruthKind = args.truth.parse()?;
    let basis = parse_basis(&args.basis)?;
    let methods: Vec<Method> = args
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<Result<Vec<_>>>()?;
    let cv_folds = args.cv_folds.unwrap_or(if bench { 5 } else { 0 });
    if cv_folds == 1 {
        return Err(Error::InvalidArgument(
            "cv-folds must be 0 (off) or at least 2".into(),
        ));
    }

    let spec = SimulationSpec {
        truth,
        d: args.d,
        big_d: args.big_d,
        n_train: args.n,
        n_test: args.n_test,
        snr: args.snr,
        seed: args.seed,
    };
    let cfg = RunConfig {
        methods: methods.clone(),
        replicates: args.replicates,
        cv_folds,
        d_prime: args.dprime,
        basis,
        lambda_grid: args.lambda_grid,
    };

    eprintln!(
        "{}",
        json!({
            "command": if bench { "bench" } else { "simulate" },
            "truth": truth.to_string(),
            "d": spec.d,
            "D": spec.big_d,
            "n": spec.n_train,
            "n_test": spec.n_test,
            "snr": spec.snr,
            "seed": spec.seed,
            "replicates": cfg.replicates,
            "methods": methods.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "dprime": cfg.d_prime,
            "basis": basis.to_string(),
            "cv_folds": cv_folds,
            "lambda_grid": cfg.lambda_grid,
            "out": args.out.as_ref().map(|p| p.display().to_string()),
        })
    );

    let records = run_methods(&spec, &cfg)?;
    if cli.json {
        let rows: Vec<serde_json::Value> = records
            .iter()
            .map(|r| {
                json!({
                    "method": r.method.to_string(),
                    "truth": r.truth.to_string(),
                    "d": r.d,
                    "D": r.big_d,
                    "n": r.n,
                    "snr": r.snr,
                    "seed": r.seed,
                    "mse": r.mse,
                    "r2": r.r2,
                })
            })
            .collect();
        let body = format!("{}\n", serde_json::to_string_pretty(&rows)?);
        write_text(args.out.as_deref(), &body)?;
    } else {
        let body = records_to_csv(&records, &timestamp_line(cli));
        write_text(args.out.as_deref(), &body)?;
    }
    Ok(())
}

fn index_to_csv(matrix: &IndexMatrix, header_comment: &str) -> String {
    let mut out = String::from(header_comment);
    for k in 1..=matrix.d() {
        let _ = write!(out, "j{k},");
    }
    out.push_str("c\n");
    for (i, row) in matrix.rows().enumerate() {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", matrix.c_value(i));
    }
    out
}

fn run_index(cli: &Cli, args: &IndexArgs) -> Result<()> {
    eprintln!(
        "{}",
        json!({
            "command": "index",
            "d": args.d,
            "dprime": args.dprime,
            "max_prod": args.span.max_prod,
            "count": args.span.count,
            "out": args.out.as_ref().map(|p| p.display().to_string()),
        })
    );

    let matrix = match (args.span.max_prod, args.span.count) {
        (Some(max_prod), None) => generate_index_matrix(args.d, args.dprime, max_prod)?,
        (None, Some(count)) => index_matrix_for_count(args.d, args.dprime, count)?,
        _ => unreachable!("clap enforces exactly one of --max-prod/--count"),
    };

    if cli.json {
        let rows: Vec<serde_json::Value> = matrix
            .rows()
            .enumerate()
            .map(|(i, row)| json!({"tuple": row, "c": matrix.c_value(i)}))
            .collect();
        let body = format!("{}\n", serde_json::to_string_pretty(&rows)?);
        write_text(args.out.as_deref(), &body)?;
    } else {
        let body = index_to_csv(&matrix, &timestamp_line(cli));
        write_text(args.out.as_deref(), &body)?;
    }
    Ok(())
}
