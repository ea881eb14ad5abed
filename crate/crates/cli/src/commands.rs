use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use psr::diagnostics::{index_plot, qq_uniform, trend_records, write_index_csv, write_qq_csv};
use psr::fitting::{fit_design, Design, Optimizer};
use psr::grid::{default_x_grid, grid_atoms, grid_limit_check, grid_psr_cdf, GridSetting};
use psr::moments::{scheme_variance, MomentMethod, MomentOptions};
use psr::residuals::{read_residuals_csv, write_residuals_csv};
use psr::scheme::{CountDist, GapDist};
use psr::simulation::simulate_outcomes;
use psr::{
    parse_dataset, residuals_for_dataset, ColumnSchema, Dataset, Family, FamilyKind, FitOptions, FittedModel,
    InspectionScheme, Observation, Preset, PsrError, ResidualOptions,
};

use crate::{
    Cli, Command, DiagnoseArgs, DistArgs, ExampleArgs, ExampleKind, FitArgs, GapKind, GridArgs, GridEmit, MomentArgs,
    ResidualArgs, SchemeArgs, SimulateArgs, TransformArg, OUT_DIR_ENV,
};

/// A contract violation in the arguments themselves.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Machine-readable category for the error JSON.
pub fn error_kind(e: &anyhow::Error) -> &'static str {
    if e.downcast_ref::<UsageError>().is_some() {
        return "usage";
    }
    match e.downcast_ref::<PsrError>() {
        Some(PsrError::MalformedRow { .. }) => "malformed_row",
        Some(PsrError::DegenerateInterval { .. }) => "degenerate_interval",
        Some(PsrError::InvalidOutcome(_)) => "invalid_outcome",
        Some(PsrError::InvalidDataset(_)) => "invalid_dataset",
        Some(PsrError::InvalidParameter(_)) => "invalid_parameter",
        Some(PsrError::InvalidInterval { .. }) => "invalid_interval",
        Some(PsrError::ZeroProbability { .. }) => "zero_probability",
        Some(PsrError::DimensionMismatch { .. }) => "dimension_mismatch",
        Some(PsrError::UnknownStratum(_)) => "unknown_stratum",
        Some(PsrError::RankDeficient(_)) => "rank_deficient",
        Some(PsrError::DegenerateData(_)) => "degenerate_data",
        Some(PsrError::InvalidScheme(_)) => "invalid_scheme",
        Some(PsrError::InsufficientData(_)) => "insufficient_data",
        Some(PsrError::Io(_)) => "io",
        Some(PsrError::Csv(_)) => "csv",
        Some(PsrError::Json(_)) => "json",
        None if e.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "error",
    }
}

struct Session {
    dump_json: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Value> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let ctx = Session { dump_json: cli.dump_json };
    if let Some(p) = &ctx.dump_json {
        check_output(p)?;
    }
    match cli.command {
        Command::Fit(a) => fit_cmd(&ctx, a),
        Command::Residuals(a) => residuals_cmd(&ctx, a),
        Command::Moments(a) => moments_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Grid(a) => grid_cmd(a),
        Command::Diagnose(a) => diagnose_cmd(&ctx, a),
        Command::Example(a) => example_cmd(a),
    }
}

fn output_path(out: Option<PathBuf>, default_name: &str) -> Result<PathBuf> {
    let path = match out {
        Some(p) => p,
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(default_name),
    };
    check_output(&path)?;
    Ok(path)
}

fn check_output(path: &Path) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(usage(format!("output directory {} does not exist", parent.display())));
    }
    Ok(())
}

fn check_input(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(usage(format!("input file {} not found", path.display())));
    }
    Ok(())
}

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    seed.ok_or_else(|| usage(format!("{command} is stochastic and needs --seed")))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn load_dataset(ctx: &Session, path: &Path, schema: &ColumnSchema) -> Result<Dataset> {
    let data = parse_dataset(path, schema)?;
    if let Some(dump) = &ctx.dump_json {
        std::fs::write(dump, data.to_json()?)?;
    }
    Ok(data)
}

fn parse_family(name: &str) -> Result<FamilyKind> {
    FamilyKind::parse(name).ok_or_else(|| usage(format!("unknown distribution `{name}`")))
}

fn family(args: &DistArgs) -> Result<Family> {
    let kind = parse_family(&args.dist)?;
    let given = |name: &'static str, v: Option<f64>| v.map(|_| name);
    let supplied: Vec<&str> = [
        given("rate", args.rate),
        given("shape", args.shape),
        given("scale", args.scale),
        given("mu", args.mu),
        given("sigma", args.sigma),
    ]
    .into_iter()
    .flatten()
    .collect();
    let allowed: &[&str] = match kind {
        FamilyKind::Exponential => &["rate"],
        FamilyKind::Weibull | FamilyKind::LogLogistic => &["shape", "scale"],
        FamilyKind::LogNormal => &["mu", "sigma"],
    };
    if let Some(extra) = supplied.iter().find(|s| !allowed.contains(s)) {
        return Err(usage(format!("--{extra} does not apply to --dist {}", args.dist)));
    }
    let need = |name: &str, v: Option<f64>| v.ok_or_else(|| usage(format!("--dist {} needs --{name}", args.dist)));
    Ok(match kind {
        FamilyKind::Exponential => Family::exponential(need("rate", args.rate)?)?,
        FamilyKind::Weibull => Family::weibull(need("shape", args.shape)?, need("scale", args.scale)?)?,
        FamilyKind::LogLogistic => Family::log_logistic(need("shape", args.shape)?, need("scale", args.scale)?)?,
        FamilyKind::LogNormal => Family::log_normal(need("mu", args.mu)?, need("sigma", args.sigma)?)?,
    })
}

fn scheme(args: &SchemeArgs) -> Result<InspectionScheme> {
    if let Some(preset) = Preset::parse(&args.scheme) {
        let gap = match args.censor_dist {
            GapKind::Exponential => GapDist::Exponential { rate: args.censor_rate },
            GapKind::Uniform => GapDist::Uniform { tau: args.censor_tau },
            GapKind::Fixed => GapDist::Fixed { tau: args.censor_tau },
        };
        let count = match (args.visits, args.visits_mean) {
            (Some(k), _) => CountDist::Fixed(k),
            (None, Some(m)) => CountDist::Geometric { mean: m },
            (None, None) => CountDist::Fixed(1),
        };
        if !matches!(preset, Preset::S1 | Preset::S6) && (args.visits.is_some() || args.visits_mean.is_some()) {
            return Err(usage(format!("preset {preset} fixes the number of examinations")));
        }
        let s = preset.scheme(gap, count);
        s.validate()?;
        return Ok(s);
    }
    let path = Path::new(&args.scheme);
    if !path.is_file() {
        return Err(usage(format!("--scheme must be s1..s6 or a scheme JSON file, got `{}`", args.scheme)));
    }
    if args.visits.is_some() || args.visits_mean.is_some() {
        return Err(usage("--visits and --visits-mean apply only to presets"));
    }
    Ok(InspectionScheme::from_json(&std::fs::read_to_string(path)?)?)
}

fn fit_cmd(ctx: &Session, a: FitArgs) -> Result<Value> {
    check_input(&a.data)?;
    let out = output_path(a.out, "model.json")?;
    let family = parse_family(&a.dist)?;
    let optimizer = Optimizer::parse(&a.optimizer).ok_or_else(|| usage(format!("unknown optimizer `{}`", a.optimizer)))?;
    let terms = split_terms(&a.covariates);
    let design = Design::parse(&terms)?;
    let mut schema = ColumnSchema::default().with_covariates(design.variables());
    if let Some(s) = &a.strata {
        schema = schema.with_stratum(s.clone());
    }
    let defaults = FitOptions::default();
    let options = FitOptions {
        max_iterations: a.max_iter.unwrap_or(defaults.max_iterations),
        rel_tol: a.rel_tol.unwrap_or(defaults.rel_tol),
        grad_tol: a.grad_tol.unwrap_or(defaults.grad_tol),
        optimizer,
    };
    let data = load_dataset(ctx, &a.data, &schema)?;
    let model = fit_design(&data, family, &design, &options)?;
    model.save(&out)?;
    Ok(json!({
        "command": "fit",
        "out": out,
        "loglik": model.loglik,
        "converged": model.converged(),
        "parameters": model.parameter_names.iter().zip(&model.parameters).map(|(n, v)| json!([n, v])).collect::<Vec<_>>(),
    }))
}

/// Splits on commas outside parentheses, so `pl(x,1,2),z` is two terms.
fn split_terms(text: &str) -> Vec<String> {
    let mut terms = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                terms.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    terms.push(current);
    terms.into_iter().map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
}

fn residuals_cmd(ctx: &Session, a: ResidualArgs) -> Result<Value> {
    check_input(&a.model)?;
    check_input(&a.data)?;
    let out = output_path(a.out, "resid.csv")?;
    let model = FittedModel::load(&a.model)?;
    let mut schema = ColumnSchema::default().with_covariates(model.design.variables());
    match (&a.strata, model.strata.is_empty()) {
        (Some(s), _) => schema = schema.with_stratum(s.clone()),
        (None, false) => schema = schema.with_stratum("stratum"),
        (None, true) => {}
    }
    let data = load_dataset(ctx, &a.data, &schema)?;
    let options = ResidualOptions {
        companions: a.companions,
        normal_transform: a.transform == TransformArg::Normal,
    };
    let records = residuals_for_dataset(&model, &data, options)?;
    write_residuals_csv(&records, create(&out)?)?;
    Ok(json!({ "command": "residuals", "out": out, "records": records.len() }))
}

fn moments_cmd(a: MomentArgs) -> Result<Value> {
    let out = output_path(a.out, "moments.json")?;
    let event = family(&a.dist)?.distribution();
    let scheme = scheme(&a.scheme)?;
    let defaults = MomentOptions::default();
    let options = MomentOptions {
        draws: a.draws.unwrap_or(defaults.draws),
        seed: a.seed.unwrap_or(defaults.seed),
    };
    let moments = scheme_variance(&event, &scheme, options)?;
    if moments.method == MomentMethod::MonteCarlo {
        require_seed(a.seed, "moments for this scheme")?;
    }
    std::fs::write(&out, serde_json::to_string_pretty(&moments)?)?;
    Ok(json!({
        "command": "moments",
        "out": out,
        "scheme": moments.scheme,
        "variance": moments.variance,
        "method": moments.method,
    }))
}

fn simulate_cmd(a: SimulateArgs) -> Result<Value> {
    let seed = require_seed(a.seed, "simulate")?;
    let out = output_path(a.out, "sim.csv")?;
    let event = family(&a.dist)?.distribution();
    let scheme = scheme(&a.scheme)?;
    let outcomes = simulate_outcomes(&event, &scheme, a.n, seed)?;
    let width = a.n.to_string().len();
    let observations = outcomes
        .into_iter()
        .enumerate()
        .map(|(i, outcome)| Observation {
            id: format!("s{:0width$}", i + 1),
            outcome,
            covariates: Vec::new(),
            stratum: None,
        })
        .collect();
    let data = Dataset::new(observations, Vec::new())?;
    data.write_csv(create(&out)?)?;
    Ok(json!({ "command": "simulate", "out": out, "n": a.n, "seed": seed, "scheme": scheme.label() }))
}

fn grid_cmd(a: GridArgs) -> Result<Value> {
    let out = output_path(a.out, "grid.csv")?;
    let taus = a
        .tau
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad --tau value `{t}`"))))
        .collect::<Result<Vec<f64>>>()?;
    if a.emit != GridEmit::Limit && taus.len() != 1 {
        return Err(usage("--tau takes a single value unless --emit limit"));
    }
    let mut w = csv::Writer::from_writer(create(&out)?);
    let rows = match a.emit {
        GridEmit::Cdf => {
            let s = GridSetting::new(a.lambda, taus[0])?;
            w.write_record(["x", "cdf", "uniform_cdf"])?;
            let xs = default_x_grid();
            for &x in &xs {
                let g = grid_psr_cdf(&s, x)?;
                w.write_record([x.to_string(), g.to_string(), ((x + 1.0) / 2.0).to_string()])?;
            }
            xs.len()
        }
        GridEmit::Atoms => {
            let s = GridSetting::new(a.lambda, taus[0])?;
            w.write_record(["k", "psr", "prob", "cdf"])?;
            let atoms = grid_atoms(&s, a.k_max);
            for atom in &atoms {
                w.write_record([atom.k.to_string(), atom.psr.to_string(), atom.prob.to_string(), atom.cdf.to_string()])?;
            }
            atoms.len()
        }
        GridEmit::Limit => {
            let report = grid_limit_check(a.lambda, &taus, &default_x_grid())?;
            w.write_record(["tau", "sup_distance"])?;
            for row in &report.rows {
                w.write_record([row.tau.to_string(), row.sup_distance.to_string()])?;
            }
            report.rows.len()
        }
    };
    w.flush()?;
    Ok(json!({ "command": "grid", "out": out, "rows": rows }))
}

enum DiagnoseOutput {
    Trend,
    Qq,
    Index,
}

fn diagnose_cmd(ctx: &Session, a: DiagnoseArgs) -> Result<Value> {
    check_input(&a.residuals)?;
    check_output(&a.out)?;
    let name = a.out.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_ascii_lowercase();
    let kind = if name.ends_with(".json") {
        DiagnoseOutput::Trend
    } else if name.ends_with(".csv") && name.starts_with("qq") {
        DiagnoseOutput::Qq
    } else if name.ends_with(".csv") {
        DiagnoseOutput::Index
    } else {
        return Err(usage("--out must end in .json (trend) or .csv (qq*.csv or index plot)"));
    };
    let records = read_residuals_csv(File::open(&a.residuals)?)?;
    match kind {
        DiagnoseOutput::Trend => {
            let (Some(data_path), Some(covariate)) = (&a.data, &a.covariate) else {
                bail!(usage("trend output needs --data and --covariate"));
            };
            check_input(data_path)?;
            let schema = ColumnSchema::default().with_covariates([covariate.clone()]);
            let data = load_dataset(ctx, data_path, &schema)?;
            let trend = trend_records(&records, &data, covariate, a.span)?;
            std::fs::write(&a.out, trend.to_json()?)?;
            Ok(json!({
                "command": "diagnose",
                "out": a.out,
                "kind": "trend",
                "max_interior_ratio": trend.max_interior_ratio(0.8),
            }))
        }
        DiagnoseOutput::Qq => {
            let qq = qq_uniform(&records)?;
            write_qq_csv(&qq, create(&a.out)?)?;
            Ok(json!({ "command": "diagnose", "out": a.out, "kind": "qq", "max_deviation": qq.max_deviation }))
        }
        DiagnoseOutput::Index => {
            let rows = index_plot(&records, !a.raw, a.threshold);
            write_index_csv(&rows, create(&a.out)?)?;
            let flagged = rows.iter().filter(|r| r.flagged).count();
            Ok(json!({ "command": "diagnose", "out": a.out, "kind": "index", "flagged": flagged }))
        }
    }
}

fn example_cmd(a: ExampleArgs) -> Result<Value> {
    let seed = require_seed(a.seed, "example")?;
    let out = output_path(a.out, "example.csv")?;
    let cohort = match a.kind {
        ExampleKind::CcasanetLike => psr::synthetic::ccasanet_like(a.n, seed)?,
    };
    cohort.data.write_csv(create(&out)?)?;
    Ok(json!({ "command": "example", "out": out, "n": a.n, "seed": seed, "counts": cohort.counts }))
}
