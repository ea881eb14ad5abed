//! Mean and variance of the residual `R` when the fitted law is the true
//! event-time law and the event time is independent of the inspection
//! process `(K, C, π)`.
//!
//! Given `(K, C, π)` with `f_j = F(C_j)`, `f_0 = 0`, `f_{K+1} = 1`,
//! `p_j = f_{j+1} - f_j` and `r_j = f_{j+1} + f_j - 1`:
//!
//! ```text
//! E[R | K, C, π]   = 0
//! E[R² | K, C, π]  = Σ_j π_j p_j³ v_j + p_j r_j²
//! ```
//!
//! where `v_j` is the variance of `2G(T) - 1` for `T` restricted to the
//! `j`-th interval (`1/3` for any continuous law).

use serde::{Deserialize, Serialize};

use crate::distributions::{check_interval, EventCdf, LifetimeDist};
use crate::error::{PsrError, Result};
use crate::quadrature::GaussLegendre;
use crate::rng::{derive_seed, sharded_map};
use crate::scheme::InspectionScheme;

/// Default number of inspection-process draws for Monte Carlo outer expectations.
pub const DEFAULT_SCHEME_DRAWS: usize = 100_000;

/// Normalized within-interval variance `v_j`:
/// `(1/p³) ∫_(l,u] (2F(t) - 1 - r)² dF(t)`.
///
/// Evaluated after the substitution `s = F(t)`, where the integrand is a
/// quadratic in `s` and three Gauss–Legendre nodes are exact.
pub fn vj_quadrature<F: EventCdf + ?Sized>(dist: &F, lower: f64, upper: f64) -> Result<f64> {
    check_interval(lower, upper)?;
    let p = dist.prob_between(lower, upper);
    if !(p > 0.0) {
        return Err(PsrError::ZeroProbability { lower, upper });
    }
    // with s = a + p x the centred integrand 2(s - a) - p is p (2x - 1)
    let rule = GaussLegendre::new(3);
    let integral = rule.integrate(0.0, 1.0, |x| {
        let centred = p * (2.0 * x - 1.0);
        centred * centred * p
    });
    Ok(integral / (p * p * p))
}

/// `v_j` by 64-node Gauss–Legendre in the time domain, with `(l, ∞)`
/// mapped through `t = l + x/(1-x)`. Independent of the `s = F(t)` route.
pub fn vj_time_domain(dist: &LifetimeDist, lower: f64, upper: f64) -> Result<f64> {
    check_interval(lower, upper)?;
    let p = dist.interval_prob(lower, upper)?;
    if !(p > 0.0) {
        return Err(PsrError::ZeroProbability { lower, upper });
    }
    let r = dist.cdf(lower) + dist.cdf(upper) - 1.0;
    let rule = GaussLegendre::new(64);
    let integrand = |t: f64| {
        if !(t > 0.0) || t.is_infinite() {
            return 0.0;
        }
        let dens = dist.log_density(t).map(f64::exp).unwrap_or(0.0);
        let d = 2.0 * dist.cdf(t) - 1.0 - r;
        d * d * dens
    };
    // integrate on the log scale for finite intervals so heavy left tails are resolved
    let integral = if upper.is_infinite() {
        rule.integrate_composite(lower, upper, 16, integrand)
    } else if lower > 0.0 {
        rule.integrate_composite(lower.ln(), upper.ln(), 16, |y| {
            let t = y.exp();
            integrand(t) * t
        })
    } else {
        // (0, u]: split at a point below which the mass is negligible
        let lo = dist.quantile(1e-16).unwrap_or(upper * 1e-12).min(upper * 0.5);
        rule.integrate_composite(lo.ln(), upper.ln(), 32, |y| {
            let t = y.exp();
            integrand(t) * t
        })
    };
    Ok(integral / (p * p * p))
}

/// `(p_j, r_j, v_j)` for one inspection interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalTerm {
    pub lower: f64,
    pub upper: f64,
    pub p: f64,
    pub r: f64,
    pub v: f64,
    pub pi: f64,
}

fn check_inspection(times: &[f64], pi: &[f64]) -> Result<()> {
    if times.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(PsrError::InvalidScheme("inspection times must be positive and finite".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PsrError::InvalidScheme("inspection times must be strictly increasing".into()));
    }
    if pi.len() != times.len() + 1 {
        return Err(PsrError::DimensionMismatch {
            expected: times.len() + 1,
            found: pi.len(),
        });
    }
    if pi.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(PsrError::InvalidScheme("mixing probabilities must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Per-interval terms for inspection times `C_1 < … < C_K` and mixing
/// probabilities `π_0, …, π_K`.
pub fn interval_terms<F: EventCdf + ?Sized>(dist: &F, times: &[f64], pi: &[f64]) -> Result<Vec<IntervalTerm>> {
    check_inspection(times, pi)?;
    let mut edges = Vec::with_capacity(times.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(times);
    edges.push(f64::INFINITY);
    edges
        .windows(2)
        .zip(pi)
        .map(|(w, &pi)| {
            let (lower, upper) = (w[0], w[1]);
            let p = dist.prob_between(lower, upper);
            let r = dist.cdf(lower) + dist.cdf(upper) - 1.0;
            let v = if p > 0.0 { vj_quadrature(dist, lower, upper)? } else { 1.0 / 3.0 };
            Ok(IntervalTerm {
                lower,
                upper,
                p,
                r,
                v,
                pi,
            })
        })
        .collect()
}

/// `E[R² | K, C, π] = Σ_j π_j p_j³ v_j + p_j r_j²`.
pub fn conditional_variance<F: EventCdf + ?Sized>(dist: &F, times: &[f64], pi: &[f64]) -> Result<f64> {
    Ok(interval_terms(dist, times, pi)?
        .iter()
        .map(|t| t.pi * t.p.powi(3) * t.v + t.p * t.r * t.r)
        .sum())
}

/// The same quantity from the CDF values `f_1 < … < f_K` alone, with `v_j = 1/3`.
pub fn conditional_variance_from_probs(f: &[f64], pi: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut total = 0.0;
    for (j, &pj) in pi.iter().enumerate() {
        let next = if j < f.len() { f[j] } else { 1.0 };
        let p = next - prev;
        let r = next + prev - 1.0;
        total += pj * p * p * p / 3.0 + p * r * r;
        prev = next;
    }
    total
}

/// Simplified conditional variances for the named presets, as functions of
/// the CDF at the inspection times and the within-interval variance `v`.
pub mod closed_form {
    /// No censoring.
    pub fn s1() -> f64 {
        1.0 / 3.0
    }

    /// Right censoring at `C` with `F(C) = fc`.
    pub fn s2(fc: f64, v0: f64) -> f64 {
        v0 * fc.powi(3) + fc * (1.0 - fc)
    }

    /// Left censoring at `C`.
    pub fn s3(fc: f64, v1: f64) -> f64 {
        v1 * (1.0 - fc).powi(3) + fc * (1.0 - fc)
    }

    /// Double censoring at `C_1 < C_2`, in the published polynomial form
    /// `v (f2-f1)³ + f1³ - 3f1² + 2f1 - f2³ + 2f2² - f2`.
    pub fn s4_published(f1: f64, f2: f64, v1: f64) -> f64 {
        v1 * (f2 - f1).powi(3) + f1.powi(3) - 3.0 * f1 * f1 + 2.0 * f1 - f2.powi(3) + 2.0 * f2 * f2 - f2
    }

    /// Double censoring with the middle interval term squared:
    /// `v (f2-f1)³ + f1 (1-f1)² + (f2-f1)(f1+f2-1)² + (1-f2) f2²`.
    pub fn s4_corrected(f1: f64, f2: f64, v1: f64) -> f64 {
        v1 * (f2 - f1).powi(3)
            + f1 * (1.0 - f1).powi(2)
            + (f2 - f1) * (f1 + f2 - 1.0).powi(2)
            + (1.0 - f2) * f2 * f2
    }

    /// Current status at `C`.
    pub fn s5(fc: f64) -> f64 {
        fc * (1.0 - fc)
    }

    /// Pure interval censoring, `Σ_{k=1}^{K} f_{k+1} f_k (f_{k+1} - f_k)`
    /// with `f` the CDF at `C_1, …, C_K` and `f_{K+1} = 1`.
    pub fn s6(f: &[f64]) -> f64 {
        (0..f.len())
            .map(|k| {
                let next = if k + 1 < f.len() { f[k + 1] } else { 1.0 };
                next * f[k] * (next - f[k])
            })
            .sum()
    }

    /// Interval censoring before simplification, `Σ_{j=0}^{K} p_j r_j²`.
    pub fn s6_unsimplified(f: &[f64]) -> f64 {
        let mut prev = 0.0;
        let mut total = 0.0;
        for j in 0..=f.len() {
            let next = if j < f.len() { f[j] } else { 1.0 };
            total += (next - prev) * (next + prev - 1.0).powi(2);
            prev = next;
        }
        total
    }
}

/// How a scheme-level variance was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ClosedForm,
    Deterministic,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeMoments {
    pub scheme: String,
    pub mean: f64,
    pub variance: f64,
    pub method: MomentMethod,
    /// Standard error of `variance` when it is a Monte Carlo average.
    pub variance_se: f64,
    pub draws: usize,
    /// Present when the inspection process is deterministic.
    pub per_interval_terms: Vec<IntervalTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentOptions {
    pub draws: usize,
    pub seed: u64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            draws: DEFAULT_SCHEME_DRAWS,
            seed: 0,
        }
    }
}

/// `Var(R) = E_{K,C,π}[E(R² | K, C, π)]` for a scheme, mean `0`.
///
/// Uses `1/3` when every event is seen exactly, one-dimensional quadrature
/// over `C` when `K = 1` and the gap law is continuous, direct evaluation for
/// deterministic processes, and otherwise averages the conditional variance
/// over `options.draws` sampled processes.
pub fn scheme_variance(event: &LifetimeDist, scheme: &InspectionScheme, options: MomentOptions) -> Result<SchemeMoments> {
    scheme.validate()?;
    let label = scheme.label();
    let done = |variance: f64, method, variance_se, draws, terms| SchemeMoments {
        scheme: label.clone(),
        mean: 0.0,
        variance,
        method,
        variance_se,
        draws,
        per_interval_terms: terms,
    };

    if scheme.always_exact() {
        return Ok(done(closed_form::s1(), MomentMethod::ClosedForm, 0.0, 0, Vec::new()));
    }

    let fixed_k = scheme.k_dist.fixed();
    if let (Some(k), true) = (fixed_k, scheme.gap_dist.is_degenerate()) {
        let tau = scheme.gap_dist.quantile(1.0);
        let times: Vec<f64> = (1..=k).map(|j| j as f64 * tau).collect();
        let pi = scheme.pi.probabilities(k);
        let terms = interval_terms(event, &times, &pi)?;
        let v = terms.iter().map(|t| t.pi * t.p.powi(3) * t.v + t.p * t.r * t.r).sum();
        return Ok(done(v, MomentMethod::Deterministic, 0.0, 0, terms));
    }

    if fixed_k == Some(1) {
        let pi = scheme.pi.probabilities(1);
        let gap = scheme.gap_dist;
        let h = |u: f64| -> f64 {
            let c = gap.quantile(u);
            conditional_variance(event, &[c], &pi).unwrap_or(f64::NAN)
        };
        let rule = GaussLegendre::new(64);
        let v = rule.integrate_composite(0.0, 1.0, 32, h);
        if v.is_finite() {
            return Ok(done(v, MomentMethod::Quadrature, 0.0, 0, Vec::new()));
        }
    }

    if options.draws < 2 {
        return Err(PsrError::InvalidScheme("Monte Carlo outer expectation needs at least 2 draws".into()));
    }
    let seed = derive_seed(options.seed, 0x6d6f_6d65);
    let values: Vec<f64> = sharded_map(options.draws, &[seed], |_, rngs| {
        let insp = scheme.sample(&mut rngs[0]);
        conditional_variance(event, &insp.times, &insp.pi).unwrap_or(f64::NAN)
    });
    if values.iter().any(|v| !v.is_finite()) {
        return Err(PsrError::InvalidScheme("scheme produced an invalid inspection process".into()));
    }
    let (mean, var) = mean_var(&values);
    Ok(done(
        mean,
        MomentMethod::MonteCarlo,
        (var / values.len() as f64).sqrt(),
        values.len(),
        Vec::new(),
    ))
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, if xs.len() > 1 { ss / (n - 1.0) } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::closed_form::*;
    use super::*;
    use crate::distributions::Family;
    use crate::scheme::{CountDist, GapDist, PiRule, Preset};

    fn exp1() -> LifetimeDist {
        Family::exponential(1.0).unwrap().distribution()
    }

    #[test]
    fn vj_is_one_third() {
        let dists = [
            exp1(),
            Family::weibull(2.5, 0.7).unwrap().distribution(),
            Family::log_normal(0.2, 1.4).unwrap().distribution(),
        ];
        for d in &dists {
            for &(l, u) in &[(0.0, 0.5), (0.3, 1.1), (1.0, f64::INFINITY), (0.0, f64::INFINITY), (2.0, 2.0001)] {
                let v = vj_quadrature(d, l, u).unwrap();
                assert!((v - 1.0 / 3.0).abs() < 1e-10, "{v}");
            }
        }
        assert!(matches!(vj_quadrature(&exp1(), 900.0, 901.0), Err(PsrError::ZeroProbability { .. })));
        assert!(vj_quadrature(&exp1(), 2.0, 1.0).is_err());
    }

    #[test]
    fn vj_time_domain_agrees() {
        let dists = [
            exp1(),
            Family::weibull(1.5, 2.0).unwrap().distribution(),
            Family::log_logistic(3.0, 1.0).unwrap().distribution(),
        ];
        for d in &dists {
            for &(l, u) in &[(0.0, 0.8), (0.3, 1.1), (1.0, f64::INFINITY), (0.5, 4.0)] {
                let v = vj_time_domain(d, l, u).unwrap();
                assert!((v - 1.0 / 3.0).abs() < 1e-8, "{d:?} ({l},{u}) {v}");
            }
        }
    }

    #[test]
    fn conditional_variance_examples() {
        let f = exp1();
        // S1 for any C
        let v = conditional_variance(&f, &[0.2, 0.9, 3.0], &[1.0; 4]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        // S5 with F(C) = 0.5
        let c = std::f64::consts::LN_2;
        let v = conditional_variance(&f, &[c], &[0.0, 0.0]).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        // S6 with K = 1 reduces to S5
        let s6 = s6(&[f.cdf(c)]);
        assert!((s6 - v).abs() < 1e-15);
        // errors
        assert!(conditional_variance(&f, &[1.0, 0.5], &[0.0; 3]).is_err());
        assert!(conditional_variance(&f, &[1.0], &[0.0; 3]).is_err());
        assert!(conditional_variance(&f, &[0.0], &[0.0; 2]).is_err());
    }

    #[test]
    fn probability_form_matches() {
        let f = Family::weibull(1.3, 1.0).unwrap().distribution();
        let times = [0.3, 0.7, 1.9];
        let pi = [0.2, 0.9, 0.0, 0.5];
        let fv: Vec<f64> = times.iter().map(|&t| f.cdf(t)).collect();
        let a = conditional_variance(&f, &times, &pi).unwrap();
        let b = conditional_variance_from_probs(&fv, &pi);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn s4_published_form_differs_from_general_sum() {
        let (f1, f2) = (0.2, 0.5);
        let general = conditional_variance_from_probs(&[f1, f2], &[0.0, 1.0, 0.0]);
        assert!((s4_corrected(f1, f2, 1.0 / 3.0) - general).abs() < 1e-15);
        assert!((s4_published(f1, f2, 1.0 / 3.0) - general).abs() > 0.1);
    }

    #[test]
    fn scheme_variance_methods() {
        let f = exp1();
        let gap = GapDist::Exponential { rate: 1.0 };
        let s1 = scheme_variance(&f, &Preset::S1.scheme(gap, CountDist::Fixed(1)), MomentOptions::default()).unwrap();
        assert_eq!(s1.variance, 1.0 / 3.0);
        assert_eq!(s1.method, MomentMethod::ClosedForm);

        // F(C) ~ U(0, 1) when T and C are both unit exponential
        let s5 = scheme_variance(&f, &Preset::S5.scheme(gap, CountDist::Fixed(1)), MomentOptions::default()).unwrap();
        assert_eq!(s5.method, MomentMethod::Quadrature);
        assert!((s5.variance - (0.5 - 1.0 / 3.0)).abs() < 1e-12);
        let s2 = scheme_variance(&f, &Preset::S2.scheme(gap, CountDist::Fixed(1)), MomentOptions::default()).unwrap();
        assert!((s2.variance - (1.0 / 12.0 + 1.0 / 6.0)).abs() < 1e-12);

        let det = InspectionScheme::new(CountDist::Fixed(3), GapDist::Fixed { tau: 0.5 }, PiRule::Constant(0.0)).unwrap();
        let m = scheme_variance(&f, &det, MomentOptions::default()).unwrap();
        assert_eq!(m.per_interval_terms.len(), 4);
        let fv: Vec<f64> = [0.5, 1.0, 1.5].iter().map(|&t| f.cdf(t)).collect();
        assert!((m.variance - s6(&fv)).abs() < 1e-14);

        let mc = InspectionScheme::new(CountDist::Geometric { mean: 3.0 }, GapDist::Uniform { tau: 1.0 }, PiRule::Constant(0.3)).unwrap();
        let opts = MomentOptions { draws: 20_000, seed: 4 };
        let a = scheme_variance(&f, &mc, opts).unwrap();
        let b = scheme_variance(&f, &mc, opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.method, MomentMethod::MonteCarlo);
        assert!(a.variance_se > 0.0 && a.variance > 0.0 && a.variance < 1.0 / 3.0);
    }
}
