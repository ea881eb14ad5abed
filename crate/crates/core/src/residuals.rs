//! Probability-scale residuals and the adjusted Cox–Snell / Lagakos
//! companions for exact, interval-, left- and right-censored outcomes.
//!
//! For a fitted continuous CDF `F`, an exact time `t` has residual
//! `2F(t) - 1` and an interval `(l, u]` has residual `F(l) + F(u) - 1`,
//! the conditional mean of `2F(T) - 1` given `T ∈ (l, u]`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Outcome, OutcomeClass};
use crate::distributions::{check_interval, norm_ppf, EventCdf, LifetimeDist};
use crate::error::{PsrError, Result};

pub fn psr_exact<F: EventCdf + ?Sized>(dist: &F, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(PsrError::InvalidOutcome(format!("exact time must be positive, got {t}")));
    }
    Ok(2.0 * dist.cdf(t) - 1.0)
}

pub fn psr_interval<F: EventCdf + ?Sized>(dist: &F, lower: f64, upper: f64) -> Result<f64> {
    check_interval(lower, upper)?;
    Ok(dist.cdf(lower) + dist.cdf(upper) - 1.0)
}

/// Residual for any outcome class.
pub fn psr_unified<F: EventCdf + ?Sized>(dist: &F, outcome: &Outcome) -> f64 {
    match *outcome {
        Outcome::Exact { time } => 2.0 * dist.cdf(time) - 1.0,
        _ => {
            let (l, u) = outcome.bounds();
            dist.cdf(l) + dist.cdf(u) - 1.0
        }
    }
}

/// The right-censored form `F(y) - δ (1 - F(y-))` with `δ = 1` for an event.
pub fn psr_right_censored<F: EventCdf + ?Sized>(dist: &F, y: f64, event: bool) -> f64 {
    let f = dist.cdf(y);
    if event {
        f - (1.0 - f)
    } else {
        f
    }
}

/// `Φ⁻¹((psr + 1) / 2)`; `±1` map to `±∞`.
pub fn psr_normal_transform(psr: f64) -> f64 {
    if psr <= -1.0 {
        f64::NEG_INFINITY
    } else if psr >= 1.0 {
        f64::INFINITY
    } else {
        norm_ppf(0.5 * (psr + 1.0))
    }
}

/// Expected unit-exponential value of the Cox–Snell interval
/// `(-log S(l), -log S(u)]`:
/// `[S(l)(1 - log S(l)) - S(u)(1 - log S(u))] / (S(l) - S(u))`.
///
/// The `S(u) = 0` term is taken at its limit `0`.
pub fn adjusted_cox_snell<F: EventCdf + ?Sized>(dist: &F, lower: f64, upper: f64) -> Result<f64> {
    check_interval(lower, upper)?;
    // S(l) factored out so far-tail intervals survive underflow of S
    let ll = dist.log_sf(lower);
    let lu = dist.log_sf(upper);
    if !(ll > lu) {
        return Err(PsrError::ZeroProbability { lower, upper });
    }
    if lu == f64::NEG_INFINITY {
        return Ok(1.0 - ll);
    }
    let ratio = (lu - ll).exp();
    Ok(((1.0 - ll) - ratio * (1.0 - lu)) / -(lu - ll).exp_m1())
}

pub fn lagakos_residual(cox_snell_adj: f64) -> f64 {
    1.0 - cox_snell_adj
}

/// Cox–Snell value for any outcome: `-log S(t)` for an exact time, the
/// adjusted value for a censoring interval.
pub fn cox_snell_unified<F: EventCdf + ?Sized>(dist: &F, outcome: &Outcome) -> Result<f64> {
    match *outcome {
        Outcome::Exact { time } => Ok(-dist.log_sf(time)),
        _ => {
            let (l, u) = outcome.bounds();
            adjusted_cox_snell(dist, l, u)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub id: String,
    pub class: OutcomeClass,
    pub psr: f64,
    pub psr_normal: Option<f64>,
    pub cox_snell_adj: Option<f64>,
    pub lagakos: Option<f64>,
    /// `|psr| = 1`, so the normal transform is infinite.
    #[serde(default)]
    pub saturated: bool,
    /// Companions computed as the `u → ∞` limit.
    #[serde(default)]
    pub open_interval_limit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualOptions {
    pub companions: bool,
    pub normal_transform: bool,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        ResidualOptions {
            companions: true,
            normal_transform: true,
        }
    }
}

pub fn residual_record(
    id: &str,
    dist: &LifetimeDist,
    outcome: &Outcome,
    options: ResidualOptions,
) -> Result<ResidualRecord> {
    let psr = psr_unified(dist, outcome).clamp(-1.0, 1.0);
    let class = outcome.classify();
    let (cox_snell_adj, lagakos, open) = if options.companions && !outcome.is_exact() {
        let (l, u) = outcome.bounds();
        let cs = adjusted_cox_snell(dist, l, u)?;
        (Some(cs), Some(lagakos_residual(cs)), u.is_infinite())
    } else {
        (None, None, false)
    };
    Ok(ResidualRecord {
        id: id.to_string(),
        class,
        psr,
        psr_normal: options.normal_transform.then(|| psr_normal_transform(psr)),
        cox_snell_adj,
        lagakos,
        saturated: psr.abs() >= 1.0,
        open_interval_limit: open,
    })
}

/// One record per observation, in row order, given each subject's fitted law.
pub fn residuals_with(
    dists: &[LifetimeDist],
    data: &Dataset,
    options: ResidualOptions,
) -> Result<Vec<ResidualRecord>> {
    if dists.len() != data.len() {
        return Err(PsrError::DimensionMismatch {
            expected: data.len(),
            found: dists.len(),
        });
    }
    data.observations()
        .iter()
        .zip(dists)
        .map(|(obs, d)| residual_record(&obs.id, d, &obs.outcome, options))
        .collect()
}

pub const RESIDUAL_CSV_HEADER: [&str; 6] = ["id", "class", "psr", "psr_normal", "cox_snell_adj", "lagakos"];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_residuals_csv<W: Write>(records: &[ResidualRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESIDUAL_CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.id.clone(),
            r.class.to_string(),
            r.psr.to_string(),
            fmt_opt(r.psr_normal),
            fmt_opt(r.cox_snell_adj),
            fmt_opt(r.lagakos),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_residuals_csv<R: Read>(reader: R) -> Result<Vec<ResidualRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| PsrError::MalformedRow {
            row: 0,
            column: name.to_string(),
            message: "column missing from header".into(),
        })
    };
    let cols: Vec<usize> = RESIDUAL_CSV_HEADER.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let text = |k: usize| rec.get(cols[k]).unwrap_or("");
        let number = |k: usize| -> Result<Option<f64>> {
            let t = text(k);
            if t.is_empty() {
                return Ok(None);
            }
            t.parse::<f64>().map(Some).map_err(|_| PsrError::MalformedRow {
                row,
                column: RESIDUAL_CSV_HEADER[k].to_string(),
                message: format!("`{t}` is not a number"),
            })
        };
        let class = OutcomeClass::parse(text(1)).ok_or_else(|| PsrError::MalformedRow {
            row,
            column: "class".into(),
            message: format!("unknown class `{}`", text(1)),
        })?;
        let psr = number(2)?.ok_or_else(|| PsrError::MalformedRow {
            row,
            column: "psr".into(),
            message: "missing value".into(),
        })?;
        let cox_snell_adj = number(4)?;
        out.push(ResidualRecord {
            id: text(0).to_string(),
            class,
            psr,
            psr_normal: number(3)?,
            cox_snell_adj,
            lagakos: number(5)?,
            saturated: psr.abs() >= 1.0,
            open_interval_limit: class == OutcomeClass::Right && cox_snell_adj.is_some(),
        });
    }
    Ok(out)
}
