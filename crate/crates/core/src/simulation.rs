//! Seedable generators for censored event-time data and the Monte Carlo
//! checks of the residual's moments.
//!
//! Event times and inspection processes come from separate random streams,
//! so changing the scheme seed never changes the event times.

use serde::{Deserialize, Serialize};

use crate::data::Outcome;
use crate::distributions::{EventCdf, LifetimeDist};
use crate::error::{PsrError, Result};
use crate::moments::{scheme_variance, MomentMethod, MomentOptions};
use crate::residuals::psr_unified;
use crate::rng::{derive_seed, open01, sharded_map};
use crate::scheme::InspectionScheme;

const EVENT_STREAM: u64 = 0x6576_656e_74;
const SCHEME_STREAM: u64 = 0x7363_6865_6d65;

/// Seeds for the two independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSeeds {
    pub event: u64,
    pub scheme: u64,
}

impl StreamSeeds {
    pub fn from_seed(seed: u64) -> Self {
        StreamSeeds {
            event: derive_seed(seed, EVENT_STREAM),
            scheme: derive_seed(seed, SCHEME_STREAM),
        }
    }
}

/// One simulated subject: the latent event time and what was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedSubject {
    pub event_time: f64,
    pub outcome: Outcome,
    /// Index `j` of the inspection interval `(C_j, C_{j+1}]` holding the event.
    pub interval: usize,
    pub inspections: usize,
}

/// Observes one event time under a realized inspection process.
fn observe(t: f64, times: &[f64], pi: &[f64], u_exact: f64) -> (Outcome, usize) {
    // first j with T <= C_{j+1}; C_{K+1} = ∞
    let j = times.partition_point(|&c| c < t);
    if u_exact < pi[j] {
        (Outcome::Exact { time: t }, j)
    } else {
        let lower = if j == 0 { 0.0 } else { times[j - 1] };
        let upper = if j == times.len() { f64::INFINITY } else { times[j] };
        (Outcome::from_bounds(lower, upper).expect("inspection times are ordered"), j)
    }
}

/// Subjects with per-subject event laws `event(i)`.
pub fn simulate_subjects_with<D>(event: D, scheme: &InspectionScheme, n: usize, seeds: StreamSeeds) -> Result<Vec<SimulatedSubject>>
where
    D: Fn(usize) -> LifetimeDist + Sync,
{
    scheme.validate()?;
    Ok(sharded_map(n, &[seeds.event, seeds.scheme], |i, rngs| {
        let dist = event(i);
        let (event_rng, rest) = rngs.split_first_mut().expect("two streams");
        let scheme_rng = &mut rest[0];
        let t = dist.quantile(open01(event_rng)).expect("open unit interval");
        let insp = scheme.sample(scheme_rng);
        let u = open01(scheme_rng);
        let (outcome, interval) = observe(t, &insp.times, &insp.pi, u);
        SimulatedSubject {
            event_time: t,
            outcome,
            interval,
            inspections: insp.times.len(),
        }
    }))
}

pub fn simulate_subjects(event: &LifetimeDist, scheme: &InspectionScheme, n: usize, seeds: StreamSeeds) -> Result<Vec<SimulatedSubject>> {
    simulate_subjects_with(|_| *event, scheme, n, seeds)
}

/// `n` observed outcomes, reproducible from `seed`.
pub fn simulate_outcomes(event: &LifetimeDist, scheme: &InspectionScheme, n: usize, seed: u64) -> Result<Vec<Outcome>> {
    if n == 0 {
        return Err(PsrError::InsufficientData("n must be at least 1".into()));
    }
    Ok(simulate_subjects(event, scheme, n, StreamSeeds::from_seed(seed))?
        .into_iter()
        .map(|s| s.outcome)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub outcome: Outcome,
    pub psr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub records: Vec<SimRecord>,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub ks_vs_uniform: Option<f64>,
    pub seed: u64,
    pub n: usize,
}

/// Outcomes with their residuals under the true law.
pub fn simulate_psr(event: &LifetimeDist, scheme: &InspectionScheme, n: usize, seed: u64) -> Result<SimResult> {
    let outcomes = simulate_outcomes(event, scheme, n, seed)?;
    let records: Vec<SimRecord> = outcomes
        .into_iter()
        .map(|o| SimRecord {
            psr: psr_unified(event, &o),
            outcome: o,
        })
        .collect();
    let psr: Vec<f64> = records.iter().map(|r| r.psr).collect();
    let stats = SampleMoments::of(&psr);
    let ks_vs_uniform = if records.iter().all(|r| r.outcome.is_exact()) {
        Some(ks_uniform(&psr)?)
    } else {
        None
    };
    Ok(SimResult {
        records,
        empirical_mean: stats.mean,
        empirical_variance: stats.variance,
        ks_vs_uniform,
        seed,
        n,
    })
}

/// Mean, variance and their Monte Carlo standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `sqrt(variance / n)`.
    pub mean_se: f64,
    /// `sqrt((m4 - variance²) / n)` with `m4` the fourth central moment.
    pub variance_se: f64,
    /// Mean of squares (the variance about a known zero mean).
    pub second_moment: f64,
    /// Standard error of `second_moment`.
    pub second_moment_se: f64,
}

impl SampleMoments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (mut m2, mut m4) = (0.0, 0.0);
        let (mut s2, mut s4) = (0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            m2 += d * d;
            m4 += d.powi(4);
            s2 += x * x;
            s4 += x.powi(4);
        }
        let variance = if n > 1 { m2 / (nf - 1.0) } else { 0.0 };
        let pop_var = m2 / nf;
        let second_moment = s2 / nf;
        SampleMoments {
            n,
            mean,
            variance,
            mean_se: (variance / nf).sqrt(),
            variance_se: ((m4 / nf - pop_var * pop_var).max(0.0) / nf).sqrt(),
            second_moment,
            second_moment_se: ((s4 / nf - second_moment * second_moment).max(0.0) / nf).sqrt(),
        }
    }
}

/// Empirical versus theoretical moments of the residual for one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub scheme: String,
    pub n: usize,
    pub seed: u64,
    pub empirical_mean: f64,
    pub mean_se: f64,
    pub empirical_variance: f64,
    pub variance_se: f64,
    pub theoretical_mean: f64,
    pub theoretical_variance: f64,
    pub theoretical_variance_se: f64,
    pub theoretical_method: MomentMethod,
    /// `empirical_mean / mean_se`.
    pub mean_z: f64,
    /// Variance discrepancy over the combined standard error.
    pub variance_z: f64,
    /// Both `|z|` within [`AGREEMENT_Z`].
    pub agrees: bool,
}

pub const AGREEMENT_Z: f64 = 4.0;

/// Simulates `n` subjects under the true law and compares the residual's
/// mean and variance with their theoretical values.
pub fn verify_properties(event: &LifetimeDist, scheme: &InspectionScheme, n: usize, seed: u64) -> Result<MomentReport> {
    if n < 2 {
        return Err(PsrError::InsufficientData("need at least 2 subjects".into()));
    }
    let sim = simulate_psr(event, scheme, n, seed)?;
    let psr: Vec<f64> = sim.records.iter().map(|r| r.psr).collect();
    let stats = SampleMoments::of(&psr);
    let theory = scheme_variance(
        event,
        scheme,
        MomentOptions {
            seed: derive_seed(seed, 0x7468_656f),
            ..MomentOptions::default()
        },
    )?;
    let mean_z = if stats.mean_se > 0.0 { stats.mean / stats.mean_se } else { 0.0 };
    let combined = (stats.variance_se.powi(2) + theory.variance_se.powi(2)).sqrt();
    let variance_z = if combined > 0.0 {
        (stats.variance - theory.variance) / combined
    } else {
        0.0
    };
    Ok(MomentReport {
        scheme: theory.scheme.clone(),
        n,
        seed,
        empirical_mean: stats.mean,
        mean_se: stats.mean_se,
        empirical_variance: stats.variance,
        variance_se: stats.variance_se,
        theoretical_mean: 0.0,
        theoretical_variance: theory.variance,
        theoretical_variance_se: theory.variance_se,
        theoretical_method: theory.method,
        mean_z,
        variance_z,
        agrees: mean_z.abs() <= AGREEMENT_Z && variance_z.abs() <= AGREEMENT_Z,
    })
}

/// Two-sided Kolmogorov–Smirnov distance from a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(PsrError::InsufficientData("empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

/// Kolmogorov–Smirnov distance from `U(-1, 1)`.
pub fn ks_uniform(samples: &[f64]) -> Result<f64> {
    ks_statistic(samples, |x| (0.5 * (x + 1.0)).clamp(0.0, 1.0))
}

/// Generic `F` wrapper for computing residuals of simulated outcomes under
/// any [`EventCdf`].
pub fn residuals_under<F: EventCdf + ?Sized>(dist: &F, outcomes: &[Outcome]) -> Vec<f64> {
    outcomes.iter().map(|o| psr_unified(dist, o)).collect()
}
