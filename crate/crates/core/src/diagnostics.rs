//! Residual diagnostics as plain data: smoothed residual-versus-covariate
//! trends, uniform QQ pairs, and index plots with outlier flags.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, OutcomeClass};
use crate::error::{PsrError, Result};
use crate::residuals::{psr_normal_transform, ResidualRecord};

pub const TREND_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SPAN: f64 = 0.75;
pub const TREND_GRID_POINTS: usize = 100;
pub const DEFAULT_FLAG_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub x: f64,
    pub psr: f64,
    pub class: OutcomeClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub fitted: f64,
    /// Pointwise standard error; the band is `fitted ± half_width`.
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendData {
    pub version: u32,
    pub covariate: String,
    pub span: f64,
    /// Residual variance about the smooth, used for every band.
    pub sigma2: f64,
    pub points: Vec<TrendPoint>,
    pub curve: Vec<CurvePoint>,
}

impl TrendData {
    /// Curve points whose `x` lies in the middle `fraction` of the grid range.
    pub fn interior(&self, fraction: f64) -> impl Iterator<Item = &CurvePoint> {
        let lo = self.curve.first().map_or(0.0, |c| c.x);
        let hi = self.curve.last().map_or(0.0, |c| c.x);
        let trim = 0.5 * (1.0 - fraction) * (hi - lo);
        self.curve
            .iter()
            .filter(move |c| c.x >= lo + trim && c.x <= hi - trim)
    }

    /// Largest `|fitted| / half_width` over the interior.
    pub fn max_interior_ratio(&self, fraction: f64) -> f64 {
        self.interior(fraction)
            .filter(|c| c.half_width > 0.0)
            .fold(0.0f64, |m, c| m.max(c.fitted.abs() / c.half_width))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Local-linear weights at `x0`: returns `l` with `fitted = Σ l_i y_i`.
fn local_linear_weights(xs: &[f64], x0: &[f64], k: usize, scratch: &mut Vec<f64>) -> Vec<Vec<f64>> {
    x0.iter()
        .map(|&at| {
            scratch.clear();
            scratch.extend(xs.iter().map(|x| (x - at).abs()));
            let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
            let mut h = *kth;
            if h <= 0.0 {
                h = xs.iter().map(|x| (x - at).abs()).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
            }
            // points exactly at distance h keep a small positive weight
            let h = h * (1.0 + 1e-10);
            let w: Vec<f64> = xs
                .iter()
                .map(|x| {
                    let u = (x - at).abs() / h;
                    if u < 1.0 {
                        (1.0 - u * u * u).powi(3)
                    } else {
                        0.0
                    }
                })
                .collect();
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for (x, wi) in xs.iter().zip(&w) {
                let d = x - at;
                s0 += wi;
                s1 += wi * d;
                s2 += wi * d * d;
            }
            let det = s0 * s2 - s1 * s1;
            if det > 1e-12 * s0 * s2 {
                xs.iter()
                    .zip(&w)
                    .map(|(x, wi)| wi * (s2 - s1 * (x - at)) / det)
                    .collect()
            } else {
                w.iter().map(|wi| wi / s0).collect()
            }
        })
        .collect()
}

/// Tricube local-linear smooth of `residuals` against `x` on a 100-point
/// grid spanning the observed range, with nearest-neighbour fraction `span`.
pub fn trend(residuals: &[f64], x: &[f64], classes: &[OutcomeClass], covariate: &str, span: f64) -> Result<TrendData> {
    let n = residuals.len();
    if x.len() != n || classes.len() != n {
        return Err(PsrError::DimensionMismatch {
            expected: n,
            found: if x.len() != n { x.len() } else { classes.len() },
        });
    }
    if n < 10 {
        return Err(PsrError::InsufficientData(format!("trend needs at least 10 points, got {n}")));
    }
    if !(span > 0.0 && span <= 1.0) {
        return Err(PsrError::InvalidParameter(format!("span must lie in (0, 1], got {span}")));
    }
    if residuals.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(PsrError::InvalidParameter("trend inputs must be finite".into()));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Err(PsrError::InvalidParameter(format!("covariate `{covariate}` has zero variance")));
    }
    let k = ((span * n as f64).ceil() as usize).clamp(3, n);

    // residual variance about the smooth at the data points
    let at_data = local_linear_weights(x, x, k, &mut Vec::with_capacity(n));
    let mut rss = 0.0;
    let mut trace = 0.0;
    for (i, l) in at_data.iter().enumerate() {
        let fit: f64 = l.iter().zip(residuals).map(|(a, y)| a * y).sum();
        rss += (residuals[i] - fit).powi(2);
        trace += l[i];
    }
    let sigma2 = rss / (n as f64 - trace).max(1.0);

    let grid: Vec<f64> = (0..TREND_GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (TREND_GRID_POINTS - 1) as f64)
        .collect();
    let curve = grid
        .par_chunks(10)
        .flat_map_iter(|chunk| {
            let weights = local_linear_weights(x, chunk, k, &mut Vec::with_capacity(n));
            chunk
                .iter()
                .zip(weights)
                .map(|(&gx, l)| {
                    let fitted: f64 = l.iter().zip(residuals).map(|(a, y)| a * y).sum();
                    let ss: f64 = l.iter().map(|a| a * a).sum();
                    CurvePoint {
                        x: gx,
                        fitted,
                        half_width: (sigma2 * ss).sqrt(),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let points = residuals
        .iter()
        .zip(x)
        .zip(classes)
        .map(|((&psr, &x), &class)| TrendPoint { x, psr, class })
        .collect();
    Ok(TrendData {
        version: TREND_SCHEMA_VERSION,
        covariate: covariate.to_string(),
        span,
        sigma2,
        points,
        curve,
    })
}

/// Covariate values for each record, matched to `data` by id.
pub fn covariate_for_records(records: &[ResidualRecord], data: &Dataset, covariate: &str) -> Result<Vec<f64>> {
    let j = data
        .covariate_index(covariate)
        .ok_or_else(|| PsrError::InvalidParameter(format!("unknown covariate `{covariate}`")))?;
    let by_id: HashMap<&str, f64> = data
        .observations()
        .iter()
        .map(|o| (o.id.as_str(), o.covariates[j]))
        .collect();
    records
        .iter()
        .map(|r| {
            by_id
                .get(r.id.as_str())
                .copied()
                .ok_or_else(|| PsrError::InvalidDataset(format!("no observation with id `{}`", r.id)))
        })
        .collect()
}

pub fn trend_records(records: &[ResidualRecord], data: &Dataset, covariate: &str, span: f64) -> Result<TrendData> {
    let x = covariate_for_records(records, data, covariate)?;
    let psr: Vec<f64> = records.iter().map(|r| r.psr).collect();
    let classes: Vec<OutcomeClass> = records.iter().map(|r| r.class).collect();
    trend(&psr, &x, &classes, covariate, span)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqData {
    pub sample: Vec<f64>,
    /// `2(i - 0.5)/n - 1`.
    pub theoretical: Vec<f64>,
    pub max_deviation: f64,
}

pub fn qq_uniform_values(values: &[f64]) -> Result<QqData> {
    if values.is_empty() {
        return Err(PsrError::InsufficientData("QQ plot needs at least one residual".into()));
    }
    let mut sample = values.to_vec();
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let theoretical: Vec<f64> = (1..=sample.len()).map(|i| 2.0 * (i as f64 - 0.5) / n - 1.0).collect();
    let max_deviation = sample
        .iter()
        .zip(&theoretical)
        .fold(0.0f64, |m, (s, t)| m.max((s - t).abs()));
    Ok(QqData {
        sample,
        theoretical,
        max_deviation,
    })
}

/// QQ pairs against `U(-1, 1)`; only exactly observed outcomes qualify.
pub fn qq_uniform(records: &[ResidualRecord]) -> Result<QqData> {
    if let Some(r) = records.iter().find(|r| r.class != OutcomeClass::Exact) {
        return Err(PsrError::InvalidParameter(format!(
            "QQ against U(-1, 1) needs exact outcomes; `{}` is {}",
            r.id, r.class
        )));
    }
    qq_uniform_values(&records.iter().map(|r| r.psr).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    /// 1-based observation number.
    pub index: usize,
    pub id: String,
    /// Plotted value: `psr_normal` when transformed, else `psr`.
    pub value: f64,
    pub psr: f64,
    pub psr_normal: f64,
    pub class: OutcomeClass,
    pub flagged: bool,
}

/// Residuals against observation number. Flags use the normal-quantile scale
/// whichever value is plotted.
pub fn index_plot(records: &[ResidualRecord], transform: bool, threshold: f64) -> Vec<IndexRow> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let z = r.psr_normal.unwrap_or_else(|| psr_normal_transform(r.psr));
            IndexRow {
                index: i + 1,
                id: r.id.clone(),
                value: if transform { z } else { r.psr },
                psr: r.psr,
                psr_normal: z,
                class: r.class,
                flagged: z.abs() > threshold,
            }
        })
        .collect()
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

pub fn write_qq_csv<W: Write>(qq: &QqData, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["theoretical", "sample"])?;
    for (t, s) in qq.theoretical.iter().zip(&qq.sample) {
        w.write_record([num(*t), num(*s)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_index_csv<W: Write>(rows: &[IndexRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "id", "value", "psr", "psr_normal", "class", "flagged"])?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            r.id.clone(),
            num(r.value),
            num(r.psr),
            num(r.psr_normal),
            r.class.as_str().to_string(),
            r.flagged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::norm_cdf;
    use crate::rng::{open01, stream_rng};
    use proptest::prelude::*;

    fn exact_classes(n: usize) -> Vec<OutcomeClass> {
        vec![OutcomeClass::Exact; n]
    }

    fn record(id: usize, psr: f64, class: OutcomeClass) -> ResidualRecord {
        ResidualRecord {
            id: id.to_string(),
            class,
            psr,
            psr_normal: Some(psr_normal_transform(psr)),
            cox_snell_adj: None,
            lagakos: None,
            saturated: false,
            open_interval_limit: false,
        }
    }

    #[test]
    fn zero_residuals_give_flat_curve() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let t = trend(&[0.0; 50], &x, &exact_classes(50), "x", 0.75).unwrap();
        assert_eq!(t.curve.len(), TREND_GRID_POINTS);
        assert!(t.curve.iter().all(|c| c.fitted == 0.0 && c.half_width == 0.0));
        assert_eq!(t.curve[0].x, 0.0);
        assert_eq!(t.curve[99].x, 49.0);
    }

    #[test]
    fn identity_residuals_track_identity_line() {
        let mut rng = stream_rng(3, 0);
        let x: Vec<f64> = (0..300).map(|_| 2.0 * open01(&mut rng) - 1.0).collect();
        let t = trend(&x, &x, &exact_classes(300), "x", 0.75).unwrap();
        for c in t.interior(0.8) {
            assert!((c.fitted - c.x).abs() < 0.02);
        }
    }

    #[test]
    fn errors() {
        let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
        assert!(matches!(
            trend(&x, &x, &exact_classes(9), "x", 0.5),
            Err(PsrError::InsufficientData(_))
        ));
        let c = [1.0; 12];
        assert!(trend(&c, &c, &exact_classes(12), "x", 0.5).is_err());
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        assert!(trend(&x, &x, &exact_classes(12), "x", 0.0).is_err());
        assert!(trend(&x, &x, &exact_classes(11), "x", 0.5).is_err());
    }

    #[test]
    fn qq_examples() {
        let n = 200;
        let grid: Vec<f64> = (1..=n).map(|i| 2.0 * (i as f64 - 0.5) / n as f64 - 1.0).collect();
        let qq = qq_uniform_values(&grid).unwrap();
        assert!(qq.max_deviation <= 1.0 / n as f64);
        let mut rng = stream_rng(5, 0);
        let big: Vec<f64> = (0..10_000).map(|_| 2.0 * open01(&mut rng) - 1.0).collect();
        assert!(qq_uniform_values(&big).unwrap().max_deviation < 0.03);
        let recs = vec![record(1, 0.2, OutcomeClass::Exact), record(2, 0.3, OutcomeClass::Right)];
        assert!(qq_uniform(&recs).is_err());
        assert!(qq_uniform(&recs[..1]).is_ok());
        assert!(qq_uniform_values(&[]).is_err());
    }

    #[test]
    fn index_flags() {
        let recs = vec![
            record(1, 0.0, OutcomeClass::Exact),
            record(2, 0.9545, OutcomeClass::Interval),
            record(3, -0.96, OutcomeClass::Right),
        ];
        let rows = index_plot(&recs, true, DEFAULT_FLAG_THRESHOLD);
        assert_eq!(rows[0].psr_normal, 0.0);
        assert!(!rows[0].flagged);
        assert!((rows[1].psr_normal - 2.0).abs() < 1e-3);
        assert!(rows[1].flagged);
        assert!(rows[2].flagged);
        assert_eq!(rows.iter().map(|r| r.index).collect::<Vec<_>>(), vec![1, 2, 3]);
        let raw = index_plot(&recs, false, DEFAULT_FLAG_THRESHOLD);
        assert_eq!(raw[1].value, 0.9545);
        let mut buf = Vec::new();
        write_index_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("index,id,value"));
    }

    #[test]
    fn flag_count_matches_binomial() {
        let n = 1380;
        let p = 2.0 * (1.0 - norm_cdf(2.0));
        let mut rng = stream_rng(21, 0);
        let recs: Vec<ResidualRecord> = (0..n)
            .map(|i| record(i, 2.0 * open01(&mut rng) - 1.0, OutcomeClass::Exact))
            .collect();
        let flagged = index_plot(&recs, true, 2.0).iter().filter(|r| r.flagged).count() as f64;
        let mean = n as f64 * p;
        assert!((flagged - mean).abs() < 4.0 * (mean * (1.0 - p)).sqrt(), "{flagged} vs {mean}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn reproduces_lines(a in -5.0f64..5.0, b in -3.0f64..3.0, n in 10usize..120, span in 0.2f64..1.0, seed in 0u64..1000) {
            let mut rng = stream_rng(seed, 0);
            let x: Vec<f64> = (0..n).map(|_| 10.0 * open01(&mut rng)).collect();
            let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
            let t = trend(&y, &x, &exact_classes(n), "x", span).unwrap();
            for c in t.interior(0.8) {
                prop_assert!((c.fitted - (a + b * c.x)).abs() < 1e-10);
                prop_assert!(c.half_width >= 0.0);
            }
            prop_assert_eq!(t.points.len(), n);
        }

        #[test]
        fn qq_sequences_are_monotone(v in proptest::collection::vec(-1.0f64..1.0, 1..200)) {
            let qq = qq_uniform_values(&v).unwrap();
            prop_assert_eq!(qq.sample.len(), qq.theoretical.len());
            prop_assert!(qq.sample.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(qq.theoretical.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
