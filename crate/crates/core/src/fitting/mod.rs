//! Maximum likelihood for log-linear AFT models on mixed-censored data.
//!
//! Exact times contribute `log f(t|z)`, intervals `log[F(u|z) - F(l|z)]`
//! (left and right censoring are the `l = 0` and `u = ∞` cases). The search
//! runs on standardized covariates with `log σ` in place of `σ`.

pub mod design;
pub mod optimize;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Outcome};
use crate::distributions::{AftSpec, ErrorLaw, FamilyKind, LifetimeDist};
use crate::error::{PsrError, Result};
use crate::residuals::{residuals_with, ResidualOptions, ResidualRecord};
use crate::rng::stream_rng;
pub use design::{Basis, Design, Term, Transform};
use optimize::{bfgs, inf_norm, nelder_mead, StopRule};

/// Returned by [`log_likelihood`] when some outcome has zero probability.
pub const LOGLIK_SENTINEL: f64 = -1.0e300;

/// `ln(1e-300)`: the floor applied to a contribution during the search.
const LOG_PROB_FLOOR: f64 = -690.775_527_898_213_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    QuasiNewton,
    NelderMead,
}

impl Optimizer {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "quasinewton" | "bfgs" => Some(Optimizer::QuasiNewton),
            "neldermead" | "simplex" => Some(Optimizer::NelderMead),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative change in log-likelihood treated as a stall.
    pub rel_tol: f64,
    /// Tolerance on the infinity norm of the per-observation mean score.
    pub grad_tol: f64,
    pub optimizer: Optimizer,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            rel_tol: 1e-8,
            grad_tol: 1e-6,
            optimizer: Optimizer::QuasiNewton,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.rel_tol > 0.0) || !(self.grad_tol > 0.0) {
            return Err(PsrError::InvalidParameter(
                "fit options need positive tolerances and iterations".into(),
            ));
        }
        Ok(())
    }

    fn stop_rule(&self) -> StopRule {
        StopRule {
            max_iterations: self.max_iterations,
            rel_tol: self.rel_tol,
            grad_tol: self.grad_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Response {
    Exact { log_t: f64 },
    Censored { log_l: f64, log_u: f64 },
}

impl Response {
    fn of(outcome: &Outcome) -> Self {
        match *outcome {
            Outcome::Exact { time } => Response::Exact { log_t: time.ln() },
            _ => {
                let (l, u) = outcome.bounds();
                Response::Censored {
                    log_l: l.ln(),
                    log_u: u.ln(),
                }
            }
        }
    }
}

/// Contribution, `d/dη` and `d/d log σ` of one response at location `eta`.
fn contribution(law: ErrorLaw, r: Response, eta: f64, sigma: f64, log_sigma: f64) -> (f64, f64, f64, bool) {
    match r {
        Response::Exact { log_t } => {
            let z = (log_t - eta) / sigma;
            let ll = law.log_pdf(z) - log_sigma - log_t;
            if !(ll >= LOG_PROB_FLOOR) {
                return (LOG_PROB_FLOOR, 0.0, 0.0, true);
            }
            let g = law.dlog_pdf(z);
            (ll, -g / sigma, -z * g - 1.0, false)
        }
        Response::Censored { log_l, log_u } => {
            if log_l == f64::NEG_INFINITY && log_u == f64::INFINITY {
                return (0.0, 0.0, 0.0, false);
            }
            let zl = (log_l - eta) / sigma;
            let zu = (log_u - eta) / sigma;
            let lp = law.log_interval_prob(zl, zu);
            if !(lp >= LOG_PROB_FLOOR) {
                return (LOG_PROB_FLOOR, 0.0, 0.0, true);
            }
            let (rl, zl_rl) = if zl.is_finite() {
                let r = (law.log_pdf(zl) - lp).exp();
                (r, r * zl)
            } else {
                (0.0, 0.0)
            };
            let (ru, zu_ru) = if zu.is_finite() {
                let r = (law.log_pdf(zu) - lp).exp();
                (r, r * zu)
            } else {
                (0.0, 0.0)
            };
            (lp, (rl - ru) / sigma, zl_rl - zu_ru, false)
        }
    }
}

/// Log-likelihood of `spec` on `data`, covariates entered linearly in
/// dataset column order. Returns [`LOGLIK_SENTINEL`] when an outcome has zero
/// probability under `spec`.
pub fn log_likelihood(spec: &AftSpec, data: &Dataset) -> Result<f64> {
    let law = spec.family.law();
    let log_sigma = spec.scale.ln();
    let mut total = 0.0;
    for obs in data.observations() {
        let eta = spec.linear_predictor(&obs.covariates, obs.stratum.as_deref())?;
        let (ll, _, _, floored) = contribution(law, Response::of(&obs.outcome), eta, spec.scale, log_sigma);
        if floored {
            return Ok(LOGLIK_SENTINEL);
        }
        total += ll;
    }
    Ok(total)
}

/// Likelihood in the search coordinates
/// `[intercept, β…, stratum offsets…, log σ]` over a fixed design.
#[derive(Debug, Clone)]
pub(crate) struct Likelihood {
    law: ErrorLaw,
    free_scale: bool,
    width: usize,
    rows: Vec<f64>,
    strata: Vec<usize>,
    n_offsets: usize,
    responses: Vec<Response>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Evaluation {
    pub value: f64,
    pub clamped: bool,
}

impl Likelihood {
    pub fn dim(&self) -> usize {
        1 + self.width + self.n_offsets + usize::from(self.free_scale)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    /// Log-likelihood with the probability floor; accumulates the score into
    /// `grad` when given.
    pub fn evaluate(&self, theta: &[f64], mut grad: Option<&mut [f64]>) -> Evaluation {
        let p = self.width;
        let log_sigma = if self.free_scale { theta[self.dim() - 1] } else { 0.0 };
        let sigma = log_sigma.exp();
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut value = 0.0;
        let mut clamped = false;
        for (i, &r) in self.responses.iter().enumerate() {
            let row = &self.rows[i * p..(i + 1) * p];
            let s = self.strata[i];
            let mut eta = theta[0] + row.iter().zip(&theta[1..=p]).map(|(x, b)| x * b).sum::<f64>();
            if s > 0 {
                eta += theta[p + s];
            }
            let (ll, d_eta, d_log_sigma, floored) = contribution(self.law, r, eta, sigma, log_sigma);
            value += ll;
            clamped |= floored;
            if let Some(g) = grad.as_deref_mut() {
                g[0] += d_eta;
                for (gj, x) in g[1..=p].iter_mut().zip(row) {
                    *gj += d_eta * x;
                }
                if s > 0 {
                    g[p + s] += d_eta;
                }
                if self.free_scale {
                    g[p + self.n_offsets + 1] += d_log_sigma;
                }
            }
        }
        Evaluation { value, clamped }
    }

    fn subset(&self, indices: &[usize]) -> Likelihood {
        let p = self.width;
        Likelihood {
            rows: indices.iter().flat_map(|&i| self.rows[i * p..(i + 1) * p].iter().copied()).collect(),
            strata: indices.iter().map(|&i| self.strata[i]).collect(),
            responses: indices.iter().map(|&i| self.responses[i]).collect(),
            ..self.clone()
        }
    }
}

/// Centring and scaling applied to design columns before the search.
#[derive(Debug, Clone, PartialEq)]
struct Standardizer {
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn to_natural(&self, theta: &[f64]) -> Vec<f64> {
        let p = self.center.len();
        let mut out = theta.to_vec();
        for j in 0..p {
            out[1 + j] = theta[1 + j] / self.scale[j];
            out[0] -= out[1 + j] * self.center[j];
        }
        out
    }

    fn from_natural(&self, theta: &[f64]) -> Vec<f64> {
        let p = self.center.len();
        let mut out = theta.to_vec();
        for j in 0..p {
            out[1 + j] = theta[1 + j] * self.scale[j];
            out[0] += theta[1 + j] * self.center[j];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    /// Infinity norm of the mean score in the standardized search coordinates.
    pub gradient_norm: f64,
    /// Whether the probability floor was active at the reported optimum.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: AftSpec,
    pub design: Design,
    /// Design column names, matching `spec.beta`.
    pub covariate_names: Vec<String>,
    /// Sorted stratum labels; the first is the reference.
    pub strata: Vec<String>,
    pub parameter_names: Vec<String>,
    /// `[intercept, β…, stratum offsets…, log σ]`.
    pub parameters: Vec<f64>,
    pub loglik: f64,
    pub n_obs: usize,
    pub convergence: Convergence,
    pub options: FitOptions,
}

impl FittedModel {
    pub fn converged(&self) -> bool {
        self.convergence.converged
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Assembles a spec from `[intercept, β…, offsets…, log σ]`.
pub fn spec_from_parameters(family: FamilyKind, theta: &[f64], width: usize, strata: &[String]) -> Result<AftSpec> {
    let n_offsets = strata.len().saturating_sub(1);
    let expected = 1 + width + n_offsets + usize::from(family.has_free_scale());
    if theta.len() != expected {
        return Err(PsrError::DimensionMismatch {
            expected,
            found: theta.len(),
        });
    }
    let scale = if family.has_free_scale() { theta[expected - 1].exp() } else { 1.0 };
    let spec = AftSpec::new(family, theta[0], theta[1..=width].to_vec(), scale)?;
    if strata.is_empty() {
        return Ok(spec);
    }
    let offsets: BTreeMap<String, f64> = strata
        .iter()
        .enumerate()
        .map(|(s, label)| (label.clone(), if s == 0 { 0.0 } else { theta[width + s] }))
        .collect();
    Ok(spec.with_strata(offsets))
}

/// Everything needed to run the search on one dataset.
struct Problem {
    likelihood: Likelihood,
    standardizer: Standardizer,
    design: Design,
    column_names: Vec<String>,
    strata: Vec<String>,
    family: FamilyKind,
}

fn stratum_indices(data: &Dataset) -> Result<(Vec<String>, Vec<usize>)> {
    if !data.has_strata() {
        return Ok((Vec::new(), vec![0; data.len()]));
    }
    let labels = data.strata();
    let idx = data
        .observations()
        .iter()
        .map(|o| {
            let s = o
                .stratum
                .as_deref()
                .ok_or_else(|| PsrError::InvalidDataset(format!("observation `{}` has no stratum", o.id)))?;
            Ok(labels.binary_search_by(|l| l.as_str().cmp(s)).expect("label collected above"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((labels, idx))
}

fn check_degenerate(data: &Dataset) -> Result<()> {
    let obs = data.observations();
    if obs.iter().all(|o| o.outcome.is_uninformative()) {
        return Err(PsrError::DegenerateData("no informative outcomes".into()));
    }
    if obs.iter().all(|o| !o.outcome.is_exact()) {
        let first = obs[0].outcome.bounds();
        if obs.iter().all(|o| o.outcome.bounds() == first) {
            return Err(PsrError::DegenerateData(format!(
                "all observations censored identically on ({}, {}]",
                first.0, first.1
            )));
        }
    }
    Ok(())
}

/// Cholesky of the scaled Gram matrix of `[1, columns…, stratum dummies…]`.
fn check_rank(rows: &[f64], width: usize, strata: &[usize], n_strata: usize, names: &[String]) -> Result<()> {
    let n = strata.len();
    let m = 1 + width + n_strata.saturating_sub(1);
    let mut gram = vec![vec![0.0; m]; m];
    let mut col = vec![0.0; m];
    for i in 0..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[0] = 1.0;
        col[1..=width].copy_from_slice(&rows[i * width..(i + 1) * width]);
        if strata[i] > 0 {
            col[width + strata[i]] = 1.0;
        }
        for a in 0..m {
            for b in 0..=a {
                gram[a][b] += col[a] * col[b] / n as f64;
            }
        }
    }
    let label = |k: usize| -> String {
        match k {
            0 => "intercept".into(),
            k if k <= width => names[k - 1].clone(),
            k => format!("stratum {}", k - width),
        }
    };
    let mut chol = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..=a {
            let s = gram[a][b] - (0..b).map(|k| chol[a][k] * chol[b][k]).sum::<f64>();
            if a == b {
                if !(s > 1e-10 * gram[a][a].max(1e-300)) || gram[a][a] == 0.0 {
                    return Err(PsrError::RankDeficient(format!(
                        "column `{}` is a linear combination of earlier columns",
                        label(a)
                    )));
                }
                chol[a][a] = s.sqrt();
            } else {
                chol[a][b] = s / chol[b][b];
            }
        }
    }
    Ok(())
}

fn build_problem(data: &Dataset, family: FamilyKind, design: &Design) -> Result<Problem> {
    let design = design.resolve(data)?;
    let column_names = design.column_names();
    let matrix = design.matrix(data)?;
    let width = column_names.len();
    let n = data.len();
    let mut center = vec![0.0; width];
    let mut scale = vec![0.0; width];
    for j in 0..width {
        let mean = matrix.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = matrix.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
        if !(var.sqrt() > 1e-12 * (mean.abs() + 1.0)) {
            return Err(PsrError::RankDeficient(format!("column `{}` is constant", column_names[j])));
        }
        center[j] = mean;
        scale[j] = var.sqrt();
    }
    let rows: Vec<f64> = matrix
        .iter()
        .flat_map(|r| r.iter().enumerate().map(|(j, x)| (x - center[j]) / scale[j]).collect::<Vec<_>>())
        .collect();
    let (strata, strata_idx) = stratum_indices(data)?;
    check_rank(&rows, width, &strata_idx, strata.len(), &column_names)?;
    check_degenerate(data)?;
    let likelihood = Likelihood {
        law: family.law(),
        free_scale: family.has_free_scale(),
        width,
        rows,
        strata: strata_idx,
        n_offsets: strata.len().saturating_sub(1),
        responses: data.observations().iter().map(|o| Response::of(&o.outcome)).collect(),
    };
    Ok(Problem {
        likelihood,
        standardizer: Standardizer { center, scale },
        design,
        column_names,
        strata,
        family,
    })
}

/// Log of the median of per-subject time proxies: exact times, interval
/// midpoints, half the left-censoring bound, the right-censoring bound.
fn start_intercept(data: &Dataset) -> f64 {
    let mut proxies: Vec<f64> = data
        .observations()
        .iter()
        .filter_map(|o| match o.outcome {
            Outcome::Exact { time } => Some(time),
            Outcome::Interval { lower, upper } => Some(0.5 * (lower + upper)),
            Outcome::LeftCensored { upper } => Some(0.5 * upper),
            Outcome::RightCensored { lower } => (lower > 0.0).then_some(lower),
        })
        .collect();
    if proxies.is_empty() {
        return 0.0;
    }
    proxies.sort_by(f64::total_cmp);
    let m = proxies.len();
    let median = if m % 2 == 1 {
        proxies[m / 2]
    } else {
        0.5 * (proxies[m / 2 - 1] + proxies[m / 2])
    };
    median.ln()
}

struct SearchResult {
    theta: Vec<f64>,
    convergence: Convergence,
}

fn search(likelihood: &Likelihood, start: &[f64], options: &FitOptions) -> SearchResult {
    let n = likelihood.len() as f64;
    let objective = |theta: &[f64], grad: &mut [f64]| {
        let e = likelihood.evaluate(theta, Some(grad));
        grad.iter_mut().for_each(|g| *g = -*g / n);
        -e.value / n
    };
    let (theta, iterations, evaluations) = match options.optimizer {
        Optimizer::QuasiNewton => {
            let r = bfgs(objective, start, options.stop_rule());
            (r.x, r.iterations, r.evaluations)
        }
        Optimizer::NelderMead => {
            let r = nelder_mead(|t| -likelihood.evaluate(t, None).value / n, start, 0.25, options.stop_rule());
            (r.x, r.iterations, r.evaluations)
        }
    };
    let mut grad = vec![0.0; theta.len()];
    let e = likelihood.evaluate(&theta, Some(&mut grad));
    let gradient_norm = inf_norm(&grad) / n;
    SearchResult {
        theta,
        convergence: Convergence {
            converged: gradient_norm <= options.grad_tol && !e.clamped && e.value.is_finite(),
            iterations,
            evaluations,
            gradient_norm,
            clamped: e.clamped,
        },
    }
}

/// Fits with every dataset covariate entered linearly.
pub fn fit(data: &Dataset, family: FamilyKind, options: &FitOptions) -> Result<FittedModel> {
    fit_design(data, family, &Design::linear(data), options)
}

pub fn fit_design(data: &Dataset, family: FamilyKind, design: &Design, options: &FitOptions) -> Result<FittedModel> {
    fit_from(data, family, design, options, None)
}

/// As [`fit_design`], starting from natural parameters `start` when given.
pub fn fit_from(
    data: &Dataset,
    family: FamilyKind,
    design: &Design,
    options: &FitOptions,
    start: Option<&[f64]>,
) -> Result<FittedModel> {
    options.validate()?;
    let problem = build_problem(data, family, design)?;
    let dim = problem.likelihood.dim();
    let start_std = match start {
        Some(s) if s.len() == dim => problem.standardizer.from_natural(s),
        Some(s) => {
            return Err(PsrError::DimensionMismatch {
                expected: dim,
                found: s.len(),
            })
        }
        None => {
            let mut s = vec![0.0; dim];
            s[0] = start_intercept(data);
            s
        }
    };
    let result = search(&problem.likelihood, &start_std, options);
    let parameters = problem.standardizer.to_natural(&result.theta);
    let spec = spec_from_parameters(family, &parameters, problem.column_names.len(), &problem.strata)?;
    let loglik = log_likelihood_design(&spec, &problem.design, data)?;
    Ok(FittedModel {
        parameter_names: parameter_names(&problem),
        spec,
        design: problem.design,
        covariate_names: problem.column_names,
        strata: problem.strata,
        parameters,
        loglik,
        n_obs: data.len(),
        convergence: result.convergence,
        options: *options,
    })
}

fn parameter_names(problem: &Problem) -> Vec<String> {
    let mut names = vec!["intercept".to_string()];
    names.extend(problem.column_names.iter().cloned());
    names.extend(problem.strata.iter().skip(1).map(|s| format!("stratum[{s}]")));
    if problem.family.has_free_scale() {
        names.push("log_scale".into());
    }
    names
}

/// Log-likelihood of `spec` with covariates expanded through `design`.
pub fn log_likelihood_design(spec: &AftSpec, design: &Design, data: &Dataset) -> Result<f64> {
    let law = spec.family.law();
    let log_sigma = spec.scale.ln();
    let rows = design.matrix(data)?;
    let mut total = 0.0;
    for (obs, row) in data.observations().iter().zip(&rows) {
        let eta = spec.linear_predictor(row, obs.stratum.as_deref())?;
        let (ll, _, _, floored) = contribution(law, Response::of(&obs.outcome), eta, spec.scale, log_sigma);
        if floored {
            return Ok(LOGLIK_SENTINEL);
        }
        total += ll;
    }
    Ok(total)
}

/// Fitted conditional law for each observation, in row order.
pub fn fitted_cdf_per_subject(model: &FittedModel, data: &Dataset) -> Result<Vec<LifetimeDist>> {
    let rows = model.design.matrix(data)?;
    data.observations()
        .iter()
        .zip(&rows)
        .map(|(obs, row)| model.spec.subject_cdf(row, obs.stratum.as_deref()))
        .collect()
}

pub fn residuals_for_dataset(model: &FittedModel, data: &Dataset, options: ResidualOptions) -> Result<Vec<ResidualRecord>> {
    residuals_with(&fitted_cdf_per_subject(model, data)?, data, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub parameter_names: Vec<String>,
    pub estimate: Vec<f64>,
    pub se: Vec<f64>,
    pub replicates: usize,
    /// Replicates whose refit did not converge; excluded from `se`.
    pub failures: usize,
}

fn summarize(model: &FittedModel, draws: Vec<Option<Vec<f64>>>) -> Result<BootstrapSummary> {
    let replicates = draws.len();
    let ok: Vec<Vec<f64>> = draws.into_iter().flatten().collect();
    if ok.len() < 2 {
        return Err(PsrError::InsufficientData("fewer than two usable bootstrap replicates".into()));
    }
    let dim = model.parameters.len();
    let m = ok.len() as f64;
    let se = (0..dim)
        .map(|k| {
            let mean = ok.iter().map(|d| d[k]).sum::<f64>() / m;
            (ok.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
        })
        .collect();
    Ok(BootstrapSummary {
        parameter_names: model.parameter_names.clone(),
        estimate: model.parameters.clone(),
        se,
        failures: replicates - ok.len(),
        replicates,
    })
}

/// Case-resampling bootstrap standard errors of `model.parameters`.
/// Each replicate refits from the original estimate on its own random
/// stream, so results do not depend on the thread count.
pub fn bootstrap_se(model: &FittedModel, data: &Dataset, replicates: usize, seed: u64) -> Result<BootstrapSummary> {
    let problem = build_problem(data, model.spec.family, &model.design)?;
    if problem.likelihood.dim() != model.parameters.len() {
        return Err(PsrError::DimensionMismatch {
            expected: problem.likelihood.dim(),
            found: model.parameters.len(),
        });
    }
    let start = problem.standardizer.from_natural(&model.parameters);
    let n = data.len();
    let draws: Vec<Option<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let idx: Vec<usize> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0..n)).collect();
            let sub = problem.likelihood.subset(&idx);
            let r = search(&sub, &start, &model.options);
            r.convergence
                .converged
                .then(|| problem.standardizer.to_natural(&r.theta))
        })
        .collect();
    summarize(model, draws)
}

/// Parametric bootstrap: `simulate(spec, replicate_seed)` draws a dataset
/// from the fitted model, which is refitted with the same design.
pub fn parametric_bootstrap_se<S>(model: &FittedModel, replicates: usize, seed: u64, simulate: S) -> Result<BootstrapSummary>
where
    S: Fn(&AftSpec, u64) -> Result<Dataset> + Sync,
{
    let draws = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let data = simulate(&model.spec, crate::rng::derive_seed(seed, b as u64))?;
            let refit = fit_from(&data, model.spec.family, &model.design, &model.options, Some(&model.parameters))?;
            Ok(refit.converged().then_some(refit.parameters))
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(model, draws)
}
