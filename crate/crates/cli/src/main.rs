//! `psr`: probability-scale residuals from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Overrides the directory used for outputs written without `--out`.
pub const OUT_DIR_ENV: &str = "PSR_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "psr", version, about = "Probability-scale residuals for censored time-to-event data")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also write every parsed input dataset as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    dump_json: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a parametric AFT model by maximum likelihood.
    Fit(FitArgs),
    /// Residuals of a fitted model on a dataset.
    Residuals(ResidualArgs),
    /// Residual variance under a censoring scheme.
    Moments(MomentArgs),
    /// Simulate censored outcomes.
    Simulate(SimulateArgs),
    /// Exponential events observed on a regular grid.
    Grid(GridArgs),
    /// Trend, QQ, or index-plot data from residuals.
    Diagnose(DiagnoseArgs),
    /// Write a synthetic example dataset.
    Example(ExampleArgs),
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// exponential, weibull, lognormal or loglogistic.
    #[arg(long)]
    dist: String,
    /// Comma-separated terms: `x`, `sqrt(x)`, `log(x)`, `pl(x,k1,..)`, `ns(x,m)`.
    #[arg(long, default_value = "")]
    covariates: String,
    /// Column holding stratum labels.
    #[arg(long)]
    strata: Option<String>,
    #[arg(long, default_value = "quasi-newton")]
    optimizer: String,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformArg {
    None,
    Normal,
}

#[derive(Debug, Args)]
struct ResidualArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Column holding stratum labels; defaults to `stratum` for stratified models.
    #[arg(long)]
    strata: Option<String>,
    /// Add adjusted Cox–Snell and Lagakos residuals for censored rows.
    #[arg(long)]
    companions: bool,
    #[arg(long, value_enum, default_value = "normal")]
    transform: TransformArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DistArgs {
    #[arg(long)]
    dist: String,
    /// Exponential rate.
    #[arg(long, alias = "lambda")]
    rate: Option<f64>,
    /// Weibull or log-logistic shape.
    #[arg(long)]
    shape: Option<f64>,
    /// Weibull or log-logistic scale.
    #[arg(long)]
    scale: Option<f64>,
    /// Log-normal location of log T.
    #[arg(long)]
    mu: Option<f64>,
    /// Log-normal scale of log T.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GapKind {
    Exponential,
    Uniform,
    Fixed,
}

#[derive(Debug, Args)]
struct SchemeArgs {
    /// A preset `s1`..`s6` or a path to a scheme JSON file.
    #[arg(long)]
    scheme: String,
    /// Law of the gaps between examinations.
    #[arg(long, value_enum, default_value = "exponential")]
    censor_dist: GapKind,
    /// Rate of exponential gaps.
    #[arg(long, default_value_t = 1.0)]
    censor_rate: f64,
    /// Width of uniform or fixed gaps.
    #[arg(long, default_value_t = 1.0)]
    censor_tau: f64,
    /// Fixed number of examinations (s1, s6).
    #[arg(long, conflicts_with = "visits_mean")]
    visits: Option<usize>,
    /// Mean of a geometric number of examinations (s1, s6).
    #[arg(long)]
    visits_mean: Option<f64>,
}

#[derive(Debug, Args)]
struct MomentArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Sampled inspection processes when Monte Carlo is needed.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridEmit {
    Cdf,
    Atoms,
    Limit,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    lambda: f64,
    /// Grid spacing; for `limit`, a comma-separated list.
    #[arg(long)]
    tau: String,
    #[arg(long, value_enum, default_value = "cdf")]
    emit: GridEmit,
    /// Largest atom index for `atoms`.
    #[arg(long, default_value_t = 100)]
    k_max: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    residuals: PathBuf,
    /// Required for trend output.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    covariate: Option<String>,
    #[arg(long, default_value_t = psr::diagnostics::DEFAULT_SPAN)]
    span: f64,
    /// Index plot on the raw scale instead of the normal scale.
    #[arg(long)]
    raw: bool,
    #[arg(long, default_value_t = psr::diagnostics::DEFAULT_FLAG_THRESHOLD)]
    threshold: f64,
    /// `*.json` for trend data, `qq*.csv` for a QQ plot, any other `*.csv` for an index plot.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExampleKind {
    CcasanetLike,
}

#[derive(Debug, Args)]
struct ExampleArgs {
    #[arg(long, value_enum, default_value = "ccasanet-like")]
    kind: ExampleKind,
    #[arg(long, default_value_t = psr::synthetic::CCASANET_LIKE_N)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let message = e.render().to_string();
            eprintln!("{}", error_json("usage", message.lines().next().unwrap_or("").trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = commands::error_kind(&e);
            eprintln!("{}", error_json(kind, &format!("{e:#}")));
            if kind == "usage" {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
