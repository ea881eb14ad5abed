//! Parametric event-time families in log-location-scale form.
//!
//! Every family is `log T = location + scale * W` for a standardized error
//! `W`: minimum extreme value (Weibull, exponential), standard normal
//! (log-normal) or standard logistic (log-logistic). A Weibull with
//! `scale = 1` is the exponential distribution with rate `exp(-location)`.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{PsrError, Result};

/// Survival probabilities below this are handled on the log scale.
pub const LOG_TAIL_THRESHOLD: f64 = 1e-8;

/// Anything that can serve as a fitted event-time CDF `F*`.
///
/// Only absolutely continuous laws are supported, so `F(t-) = F(t)`.
pub trait EventCdf {
    fn cdf(&self, t: f64) -> f64;

    fn sf(&self, t: f64) -> f64 {
        1.0 - self.cdf(t)
    }

    fn log_sf(&self, t: f64) -> f64 {
        self.sf(t).ln()
    }

    /// `F(u) - F(l)`.
    fn prob_between(&self, lower: f64, upper: f64) -> f64 {
        if self.cdf(lower) > 0.5 {
            self.sf(lower) - self.sf(upper)
        } else {
            self.cdf(upper) - self.cdf(lower)
        }
    }
}

/// Standardized error law on the log-time scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLaw {
    /// Minimum extreme value: `F(w) = 1 - exp(-e^w)`.
    ExtremeValue,
    Normal,
    Logistic,
}

impl ErrorLaw {
    pub fn cdf(self, z: f64) -> f64 {
        match self {
            ErrorLaw::ExtremeValue => -(-z.exp()).exp_m1(),
            ErrorLaw::Normal => norm_cdf(z),
            ErrorLaw::Logistic => logistic(z),
        }
    }

    pub fn sf(self, z: f64) -> f64 {
        match self {
            ErrorLaw::ExtremeValue => (-z.exp()).exp(),
            ErrorLaw::Normal => norm_cdf(-z),
            ErrorLaw::Logistic => logistic(-z),
        }
    }

    pub fn log_cdf(self, z: f64) -> f64 {
        match self {
            ErrorLaw::ExtremeValue => {
                let e = z.exp();
                if e < 1e-3 {
                    // 1 - exp(-e) = e (1 - e/2 + ...)
                    z + (-(e / 2.0) + e * e / 6.0).ln_1p()
                } else {
                    (-(-e).exp_m1()).ln()
                }
            }
            ErrorLaw::Normal => log_norm_cdf(z),
            ErrorLaw::Logistic => -softplus(-z),
        }
    }

    pub fn log_sf(self, z: f64) -> f64 {
        match self {
            ErrorLaw::ExtremeValue => -z.exp(),
            ErrorLaw::Normal => log_norm_cdf(-z),
            ErrorLaw::Logistic => -softplus(z),
        }
    }

    pub fn log_pdf(self, z: f64) -> f64 {
        match self {
            ErrorLaw::ExtremeValue => z - z.exp(),
            ErrorLaw::Normal => -0.5 * z * z - 0.5 * (2.0 * PI).ln(),
            ErrorLaw::Logistic => -z.abs() - 2.0 * (-z.abs()).exp().ln_1p(),
        }
    }

    pub fn pdf(self, z: f64) -> f64 {
        if z.is_infinite() {
            return 0.0;
        }
        self.log_pdf(z).exp()
    }

    /// Derivative of `log_pdf` with respect to `z`.
    pub fn dlog_pdf(self, z: f64) -> f64 {
        match self {
            ErrorLaw::ExtremeValue => 1.0 - z.exp(),
            ErrorLaw::Normal => -z,
            ErrorLaw::Logistic => -(0.5 * z).tanh(),
        }
    }

    pub fn quantile(self, p: f64) -> f64 {
        match self {
            ErrorLaw::ExtremeValue => (-(-p).ln_1p()).ln(),
            ErrorLaw::Normal => norm_ppf(p),
            ErrorLaw::Logistic => p.ln() - (-p).ln_1p(),
        }
    }

    /// `log(F(zu) - F(zl))` for `zl < zu`, either endpoint possibly infinite.
    pub fn log_interval_prob(self, zl: f64, zu: f64) -> f64 {
        if zl == f64::NEG_INFINITY {
            return self.log_cdf(zu);
        }
        if zu == f64::INFINITY {
            return self.log_sf(zl);
        }
        if self.cdf(zl) > 0.5 {
            let (a, b) = (self.log_sf(zl), self.log_sf(zu));
            a + log1mexp(b - a)
        } else {
            let (a, b) = (self.log_cdf(zu), self.log_cdf(zl));
            a + log1mexp(b - a)
        }
    }

    /// `F(zu) - F(zl)` evaluated without cancellation in either tail.
    pub fn interval_prob(self, zl: f64, zu: f64) -> f64 {
        if zl == f64::NEG_INFINITY {
            return self.cdf(zu);
        }
        if zu == f64::INFINITY {
            return self.sf(zl);
        }
        let sl = self.sf(zl);
        if sl < LOG_TAIL_THRESHOLD {
            return self.log_interval_prob(zl, zu).exp();
        }
        if sl < 0.5 {
            sl - self.sf(zu)
        } else {
            self.cdf(zu) - self.cdf(zl)
        }
    }
}

/// `log(1 - exp(x))` for `x <= 0`.
pub(crate) fn log1mexp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal log-CDF, accurate far into the lower tail.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z > -30.0 {
        norm_cdf(z).ln()
    } else {
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// Standard normal quantile; `0` and `1` map to `∓∞`.
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let z = -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p);
    // one Newton step on whichever tail is representable
    let density = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    if density > 1e-300 {
        let err = if p < 0.5 {
            norm_cdf(z) - p
        } else {
            (1.0 - p) - norm_cdf(-z)
        };
        z - err / density
    } else {
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Exponential,
    Weibull,
    LogNormal,
    LogLogistic,
}

impl FamilyKind {
    pub fn law(self) -> ErrorLaw {
        match self {
            FamilyKind::Exponential | FamilyKind::Weibull => ErrorLaw::ExtremeValue,
            FamilyKind::LogNormal => ErrorLaw::Normal,
            FamilyKind::LogLogistic => ErrorLaw::Logistic,
        }
    }

    /// Whether the log-scale parameter is free (exponential fixes it at 1).
    pub fn has_free_scale(self) -> bool {
        !matches!(self, FamilyKind::Exponential)
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "exponential" | "exp" => Some(FamilyKind::Exponential),
            "weibull" => Some(FamilyKind::Weibull),
            "lognormal" => Some(FamilyKind::LogNormal),
            "loglogistic" => Some(FamilyKind::LogLogistic),
            _ => None,
        }
    }
}

/// An event-time law in its natural parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    LogNormal { mu: f64, sigma: f64 },
    LogLogistic { shape: f64, scale: f64 },
}

impl Family {
    pub fn exponential(rate: f64) -> Result<Self> {
        Family::Exponential { rate }.validated()
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Family::Weibull { shape, scale }.validated()
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        Family::LogNormal { mu, sigma }.validated()
    }

    pub fn log_logistic(shape: f64, scale: f64) -> Result<Self> {
        Family::LogLogistic { shape, scale }.validated()
    }

    fn validated(self) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(PsrError::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            Family::Exponential { rate } => positive("rate", rate)?,
            Family::Weibull { shape, scale } | Family::LogLogistic { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)?;
            }
            Family::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(PsrError::InvalidParameter(format!("mu must be finite, got {mu}")));
                }
                positive("sigma", sigma)?;
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::Exponential { .. } => FamilyKind::Exponential,
            Family::Weibull { .. } => FamilyKind::Weibull,
            Family::LogNormal { .. } => FamilyKind::LogNormal,
            Family::LogLogistic { .. } => FamilyKind::LogLogistic,
        }
    }

    pub fn distribution(&self) -> LifetimeDist {
        let (location, scale) = match *self {
            Family::Exponential { rate } => (-rate.ln(), 1.0),
            Family::Weibull { shape, scale } => (scale.ln(), 1.0 / shape),
            Family::LogNormal { mu, sigma } => (mu, sigma),
            Family::LogLogistic { shape, scale } => (scale.ln(), 1.0 / shape),
        };
        LifetimeDist {
            law: self.kind().law(),
            location,
            scale,
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        self.distribution().cdf(t)
    }

    pub fn sf(&self, t: f64) -> f64 {
        self.distribution().sf(t)
    }

    pub fn interval_prob(&self, lower: f64, upper: f64) -> Result<f64> {
        self.distribution().interval_prob(lower, upper)
    }

    pub fn log_density(&self, t: f64) -> Result<f64> {
        self.distribution().log_density(t)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.distribution().quantile(p)
    }
}

impl EventCdf for Family {
    fn cdf(&self, t: f64) -> f64 {
        Family::cdf(self, t)
    }

    fn sf(&self, t: f64) -> f64 {
        Family::sf(self, t)
    }

    fn log_sf(&self, t: f64) -> f64 {
        self.distribution().log_sf(t)
    }
}

/// A concrete fitted event-time distribution: `log T = location + scale * W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeDist {
    pub law: ErrorLaw,
    pub location: f64,
    pub scale: f64,
}

impl LifetimeDist {
    /// Standardized log-time; `0 ↦ -∞`, `∞ ↦ ∞`.
    pub fn standardize(&self, t: f64) -> f64 {
        if t <= 0.0 {
            f64::NEG_INFINITY
        } else if t == f64::INFINITY {
            f64::INFINITY
        } else {
            (t.ln() - self.location) / self.scale
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t == f64::INFINITY {
            return 1.0;
        }
        self.law.cdf(self.standardize(t))
    }

    pub fn sf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if t == f64::INFINITY {
            return 0.0;
        }
        self.law.sf(self.standardize(t))
    }

    pub fn log_sf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        self.law.log_sf(self.standardize(t))
    }

    pub fn log_density(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(PsrError::InvalidParameter(format!("density needs t > 0, got {t}")));
        }
        let z = self.standardize(t);
        Ok(self.law.log_pdf(z) - self.scale.ln() - t.ln())
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(PsrError::InvalidParameter(format!("quantile needs p in (0, 1), got {p}")));
        }
        Ok((self.location + self.scale * self.law.quantile(p)).exp())
    }

    pub fn interval_prob(&self, lower: f64, upper: f64) -> Result<f64> {
        check_interval(lower, upper)?;
        Ok(self
            .law
            .interval_prob(self.standardize(lower), self.standardize(upper))
            .max(0.0))
    }

    pub fn log_interval_prob(&self, lower: f64, upper: f64) -> Result<f64> {
        check_interval(lower, upper)?;
        Ok(self
            .law
            .log_interval_prob(self.standardize(lower), self.standardize(upper)))
    }

    /// Same law with every quantile multiplied by `factor`.
    pub fn accelerated(&self, factor: f64) -> LifetimeDist {
        LifetimeDist {
            location: self.location + factor.ln(),
            ..*self
        }
    }
}

impl EventCdf for LifetimeDist {
    fn cdf(&self, t: f64) -> f64 {
        LifetimeDist::cdf(self, t)
    }

    fn sf(&self, t: f64) -> f64 {
        LifetimeDist::sf(self, t)
    }

    fn log_sf(&self, t: f64) -> f64 {
        LifetimeDist::log_sf(self, t)
    }

    fn prob_between(&self, lower: f64, upper: f64) -> f64 {
        self.law
            .interval_prob(self.standardize(lower), self.standardize(upper))
            .max(0.0)
    }
}

pub(crate) fn check_interval(lower: f64, upper: f64) -> Result<()> {
    if lower.is_nan() || upper.is_nan() || lower < 0.0 || lower >= upper || lower.is_infinite() {
        return Err(PsrError::InvalidInterval { lower, upper });
    }
    Ok(())
}

/// Log-linear accelerated-failure-time model:
/// `log T = intercept + beta·z + offset[stratum] + scale * W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AftSpec {
    pub family: FamilyKind,
    pub intercept: f64,
    pub beta: Vec<f64>,
    pub scale: f64,
    /// Location offsets per stratum; the reference stratum maps to `0.0`.
    #[serde(default)]
    pub strata_offsets: BTreeMap<String, f64>,
}

impl AftSpec {
    pub fn new(family: FamilyKind, intercept: f64, beta: Vec<f64>, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(PsrError::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        if !family.has_free_scale() && scale != 1.0 {
            return Err(PsrError::InvalidParameter("exponential model has scale fixed at 1".into()));
        }
        Ok(AftSpec {
            family,
            intercept,
            beta,
            scale,
            strata_offsets: BTreeMap::new(),
        })
    }

    pub fn with_strata(mut self, offsets: BTreeMap<String, f64>) -> Self {
        self.strata_offsets = offsets;
        self
    }

    pub fn linear_predictor(&self, z: &[f64], stratum: Option<&str>) -> Result<f64> {
        if z.len() != self.beta.len() {
            return Err(PsrError::DimensionMismatch {
                expected: self.beta.len(),
                found: z.len(),
            });
        }
        let offset = if self.strata_offsets.is_empty() {
            0.0
        } else {
            let label = stratum.ok_or_else(|| PsrError::UnknownStratum("<none>".into()))?;
            *self
                .strata_offsets
                .get(label)
                .ok_or_else(|| PsrError::UnknownStratum(label.to_string()))?
        };
        Ok(self.intercept + offset + self.beta.iter().zip(z).map(|(b, x)| b * x).sum::<f64>())
    }

    /// Fitted conditional distribution `F*(· | z)`.
    pub fn subject_cdf(&self, z: &[f64], stratum: Option<&str>) -> Result<LifetimeDist> {
        Ok(LifetimeDist {
            law: self.family.law(),
            location: self.linear_predictor(z, stratum)?,
            scale: self.scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_families() -> Vec<Family> {
        vec![
            Family::exponential(1.3).unwrap(),
            Family::weibull(1.7, 2.0).unwrap(),
            Family::weibull(0.6, 0.5).unwrap(),
            Family::log_normal(0.3, 0.8).unwrap(),
            Family::log_logistic(2.5, 1.5).unwrap(),
        ]
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn exponential_reference_values() {
        let e = Family::exponential(1.0).unwrap();
        assert!((e.cdf(LN_2) - 0.5).abs() < 1e-15);
        assert!((e.interval_prob(LN_2, f64::INFINITY).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(e.interval_prob(0.0, f64::INFINITY).unwrap(), 1.0);
        assert!((e.log_density(1.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(rel(e.quantile(0.5).unwrap(), LN_2) < 1e-15);
    }

    #[test]
    fn support_boundaries() {
        for f in all_families() {
            assert_eq!(f.cdf(0.0), 0.0);
            assert_eq!(f.cdf(f64::INFINITY), 1.0);
            assert_eq!(f.interval_prob(0.0, f64::INFINITY).unwrap(), 1.0);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(Family::exponential(0.0).is_err());
        assert!(Family::weibull(-1.0, 1.0).is_err());
        assert!(Family::log_normal(f64::NAN, 1.0).is_err());
        let e = Family::exponential(1.0).unwrap();
        assert!(e.quantile(0.0).is_err());
        assert!(e.quantile(1.0).is_err());
        assert!(e.interval_prob(2.0, 2.0).is_err());
        assert!(e.interval_prob(3.0, 2.0).is_err());
        assert!(e.log_density(0.0).is_err());
    }

    #[test]
    fn weibull_shape_one_is_exponential() {
        let w = Family::weibull(1.0, 1.0).unwrap();
        let e = Family::exponential(1.0).unwrap();
        for &(a, b) in &[(0.0, 0.3), (0.5, 2.0), (3.0, f64::INFINITY), (10.0, 12.5)] {
            let pw = w.interval_prob(a, b).unwrap();
            let pe = e.interval_prob(a, b).unwrap();
            assert!((pw - pe).abs() < 1e-15, "{a} {b}");
        }
    }

    #[test]
    fn tail_stability() {
        let e = Family::exponential(1.0).unwrap();
        let p = e.interval_prob(40.0, 41.0).unwrap();
        let expected = (-40.0f64).exp() - (-41.0f64).exp();
        assert!(p > 0.0);
        assert!(rel(p, expected) < 1e-6);
        let lp = e.distribution().log_interval_prob(400.0, 401.0).unwrap();
        let expected = -400.0 + (-(-1.0f64).exp()).ln_1p();
        assert!((lp - expected).abs() < 1e-10);
        // normal far tail
        let ln = Family::log_normal(0.0, 1.0).unwrap().distribution();
        let lp = ln.log_interval_prob(50f64.exp(), f64::INFINITY).unwrap();
        assert!(lp.is_finite() && lp < -1200.0);
    }

    #[test]
    fn log_cdf_and_log_sf_agree_with_direct_values() {
        for law in [ErrorLaw::ExtremeValue, ErrorLaw::Normal, ErrorLaw::Logistic] {
            for &z in &[-5.0, -1.0, -0.01, 0.0, 0.4, 2.0, 3.5] {
                assert!((law.log_cdf(z).exp() - law.cdf(z)).abs() < 1e-14, "{law:?} {z}");
                assert!((law.log_sf(z).exp() - law.sf(z)).abs() < 1e-14, "{law:?} {z}");
                assert!((law.cdf(z) + law.sf(z) - 1.0).abs() < 1e-15);
            }
        }
        // asymptotic branch of the normal log-CDF joins smoothly
        let a = log_norm_cdf(-29.999);
        let b = log_norm_cdf(-30.001);
        assert!(a > b && (a - b) < 0.07);
    }

    #[test]
    fn density_derivative_matches_finite_differences() {
        for law in [ErrorLaw::ExtremeValue, ErrorLaw::Normal, ErrorLaw::Logistic] {
            for &z in &[-2.0, -0.3, 0.7, 1.9] {
                let h = 1e-6;
                let fd = (law.log_pdf(z + h) - law.log_pdf(z - h)) / (2.0 * h);
                assert!((fd - law.dlog_pdf(z)).abs() < 1e-7);
                let fd = (law.cdf(z + h) - law.cdf(z - h)) / (2.0 * h);
                assert!((fd - law.pdf(z)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn aft_subject_cdf() {
        let spec = AftSpec::new(FamilyKind::Weibull, 0.4, vec![0.0, 0.0], 0.5).unwrap();
        let base = Family::weibull(2.0, 0.4f64.exp()).unwrap().distribution();
        let d = spec.subject_cdf(&[1.0, -3.0], None).unwrap();
        assert_eq!(d, base);

        // scaling the acceleration factor scales every quantile by it
        let spec = AftSpec::new(FamilyKind::LogLogistic, 0.1, vec![0.7], 0.8).unwrap();
        let d0 = spec.subject_cdf(&[0.0], None).unwrap();
        let d1 = spec.subject_cdf(&[2.0f64.ln() / 0.7], None).unwrap();
        for p in [0.1, 0.5, 0.9] {
            assert!(rel(d1.quantile(p).unwrap(), 2.0 * d0.quantile(p).unwrap()) < 1e-12);
        }

        // exponential: median is ln 2 · e^mu
        let spec = AftSpec::new(FamilyKind::Exponential, 0.9, vec![], 1.0).unwrap();
        let d = spec.subject_cdf(&[], None).unwrap();
        assert!(rel(d.quantile(0.5).unwrap(), LN_2 * 0.9f64.exp()) < 1e-14);

        assert!(spec.subject_cdf(&[1.0], None).is_err());
        assert!(AftSpec::new(FamilyKind::Exponential, 0.0, vec![], 2.0).is_err());
    }

    #[test]
    fn strata_offsets() {
        let offsets = BTreeMap::from([("a".to_string(), 0.0), ("b".to_string(), 0.5)]);
        let spec = AftSpec::new(FamilyKind::Weibull, 1.0, vec![], 1.0)
            .unwrap()
            .with_strata(offsets);
        assert_eq!(spec.linear_predictor(&[], Some("b")).unwrap(), 1.5);
        assert!(matches!(
            spec.subject_cdf(&[], Some("zzz")),
            Err(PsrError::UnknownStratum(_))
        ));
        assert!(spec.subject_cdf(&[], None).is_err());
    }

    #[test]
    fn norm_ppf_round_trip() {
        for &p in &[1e-12, 1e-5, 0.02275, 0.3, 0.5, 0.7, 0.97725, 1.0 - 1e-9] {
            let z = norm_ppf(p);
            assert!(rel(norm_cdf(z), p) < 1e-12, "{p}");
        }
        assert!((norm_ppf(0.5)).abs() < 1e-15);
    }

    fn arb_family() -> impl Strategy<Value = Family> {
        prop_oneof![
            (0.05f64..5.0).prop_map(|r| Family::exponential(r).unwrap()),
            (0.3f64..4.0, 0.2f64..5.0).prop_map(|(a, b)| Family::weibull(a, b).unwrap()),
            (-1.0f64..1.0, 0.2f64..2.0).prop_map(|(a, b)| Family::log_normal(a, b).unwrap()),
            (0.3f64..4.0, 0.2f64..5.0).prop_map(|(a, b)| Family::log_logistic(a, b).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn cdf_is_monotone(f in arb_family(), a in 0f64..20.0, d in 0f64..20.0) {
            prop_assert!(f.cdf(a) <= f.cdf(a + d));
            let p = f.cdf(a);
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn interval_prob_is_additive(f in arb_family(), l in 0f64..5.0, w1 in 1e-6f64..5.0, w2 in 1e-6f64..5.0, open in any::<bool>()) {
            let u = l + w1;
            let v = if open { f64::INFINITY } else { u + w2 };
            let lhs = f.interval_prob(l, u).unwrap() + f.interval_prob(u, v).unwrap();
            let rhs = f.interval_prob(l, v).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12, "{} vs {}", lhs, rhs);
            prop_assert!(f.interval_prob(l, u).unwrap() >= 0.0);
        }

        #[test]
        fn quantile_inverts_cdf(f in arb_family(), p in 0.001f64..0.999) {
            let t = f.quantile(p).unwrap();
            prop_assert!(rel(f.cdf(t), p) < 1e-10);
            prop_assert!(rel(f.quantile(f.cdf(t)).unwrap(), t) < 1e-10);
        }
    }
}
