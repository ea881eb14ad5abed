//! Inspection processes `(K, C, π)`: how many examinations a subject gets,
//! when they happen, and the chance that an event inside each inter-visit
//! interval is seen exactly rather than only as the interval.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{PsrError, Result};

/// Law of the number of examinations `K ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountDist {
    Fixed(usize),
    /// Geometric on `{1, 2, ...}` with the given mean.
    Geometric { mean: f64 },
    /// `weights[i]` is proportional to `Pr(K = i + 1)`.
    Empirical { weights: Vec<f64> },
}

impl CountDist {
    fn validate(&self) -> Result<()> {
        match self {
            CountDist::Fixed(k) if *k == 0 => Err(PsrError::InvalidScheme("K must be at least 1".into())),
            CountDist::Geometric { mean } if !(mean.is_finite() && *mean >= 1.0) => Err(
                PsrError::InvalidScheme(format!("geometric K needs mean >= 1, got {mean}")),
            ),
            CountDist::Empirical { weights }
                if weights.is_empty()
                    || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
                    || weights.iter().sum::<f64>() <= 0.0 =>
            {
                Err(PsrError::InvalidScheme("empirical K weights must be nonnegative with positive sum".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            CountDist::Fixed(k) => *k,
            CountDist::Geometric { mean } => {
                if *mean == 1.0 {
                    // still consume a draw so stream usage does not depend on parameters
                    let _: f64 = rng.random();
                    return 1;
                }
                let g = Geometric::new(1.0 / mean).expect("validated mean");
                1 + g.sample(rng) as usize
            }
            CountDist::Empirical { weights } => {
                let total: f64 = weights.iter().sum();
                let mut target = rng.random::<f64>() * total;
                for (i, w) in weights.iter().enumerate() {
                    if target < *w {
                        return i + 1;
                    }
                    target -= w;
                }
                weights.iter().rposition(|w| *w > 0.0).unwrap_or(0) + 1
            }
        }
    }

    pub fn fixed(&self) -> Option<usize> {
        match self {
            CountDist::Fixed(k) => Some(*k),
            CountDist::Empirical { weights } => {
                let nonzero: Vec<usize> = weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(i, _)| i + 1)
                    .collect();
                (nonzero.len() == 1).then(|| nonzero[0])
            }
            CountDist::Geometric { mean } => (*mean == 1.0).then_some(1),
        }
    }
}

/// Law of the gaps `C_j - C_{j-1} > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapDist {
    Fixed { tau: f64 },
    /// Uniform on `(0, tau]`.
    Uniform { tau: f64 },
    Exponential { rate: f64 },
}

impl GapDist {
    fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            GapDist::Fixed { tau } | GapDist::Uniform { tau } => ("tau", tau),
            GapDist::Exponential { rate } => ("rate", rate),
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(PsrError::InvalidScheme(format!("gap {name} must be positive, got {v}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(1.0 - u)
    }

    /// Quantile on `(0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            GapDist::Fixed { tau } => tau,
            GapDist::Uniform { tau } => tau * p,
            GapDist::Exponential { rate } => -(-p).ln_1p() / rate,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, GapDist::Fixed { .. })
    }
}

/// Probabilities `π_j` of seeing the exact time when `T ∈ (C_j, C_{j+1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiRule {
    Constant(f64),
    /// `π_j = values[j]`, repeating the last entry for larger `j`.
    PerIndex(Vec<f64>),
    /// `π_j = exact` for bounded intervals and `0` for the last, open one:
    /// events after the final visit are never seen.
    FollowUp { exact: f64 },
}

impl PiRule {
    fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        let valid = match self {
            PiRule::Constant(p) | PiRule::FollowUp { exact: p } => ok(*p),
            PiRule::PerIndex(v) => !v.is_empty() && v.iter().all(|p| ok(*p)),
        };
        if valid {
            Ok(())
        } else {
            Err(PsrError::InvalidScheme("mixing probabilities must lie in [0, 1]".into()))
        }
    }

    /// `(π_0, …, π_k)`.
    pub fn probabilities(&self, k: usize) -> Vec<f64> {
        match self {
            PiRule::Constant(p) => vec![*p; k + 1],
            PiRule::PerIndex(v) => (0..=k).map(|j| v[j.min(v.len() - 1)]).collect(),
            PiRule::FollowUp { exact } => {
                let mut p = vec![*exact; k + 1];
                p[k] = 0.0;
                p
            }
        }
    }

    pub fn pi(&self, j: usize, k: usize) -> f64 {
        match self {
            PiRule::Constant(p) => *p,
            PiRule::PerIndex(v) => v[j.min(v.len() - 1)],
            PiRule::FollowUp { exact } => {
                if j == k {
                    0.0
                } else {
                    *exact
                }
            }
        }
    }
}

/// Named censoring patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// No censoring, `π ≡ 1`.
    S1,
    /// Right censoring, `K = 1`, `π = (1, 0)`.
    S2,
    /// Left censoring, `K = 1`, `π = (0, 1)`.
    S3,
    /// Double censoring, `K = 2`, `π = (0, 1, 0)`.
    S4,
    /// Current status, `K = 1`, `π = (0, 0)`.
    S5,
    /// Interval censoring, `π ≡ 0`.
    S6,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::S1, Preset::S2, Preset::S3, Preset::S4, Preset::S5, Preset::S6];

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" => Some(Preset::S1),
            "s2" => Some(Preset::S2),
            "s3" => Some(Preset::S3),
            "s4" => Some(Preset::S4),
            "s5" => Some(Preset::S5),
            "s6" => Some(Preset::S6),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Preset::S1 => "s1",
            Preset::S2 => "s2",
            Preset::S3 => "s3",
            Preset::S4 => "s4",
            Preset::S5 => "s5",
            Preset::S6 => "s6",
        }
    }

    /// The preset's scheme. `count` is used only by S1 and S6; the others fix `K`.
    pub fn scheme(self, gap: GapDist, count: CountDist) -> InspectionScheme {
        let (count, pi) = match self {
            Preset::S1 => (count, PiRule::Constant(1.0)),
            Preset::S2 => (CountDist::Fixed(1), PiRule::PerIndex(vec![1.0, 0.0])),
            Preset::S3 => (CountDist::Fixed(1), PiRule::PerIndex(vec![0.0, 1.0])),
            Preset::S4 => (CountDist::Fixed(2), PiRule::PerIndex(vec![0.0, 1.0, 0.0])),
            Preset::S5 => (CountDist::Fixed(1), PiRule::PerIndex(vec![0.0, 0.0])),
            Preset::S6 => (count, PiRule::Constant(0.0)),
        };
        InspectionScheme {
            k_dist: count,
            gap_dist: gap,
            pi,
            preset: Some(self),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A censoring mechanism `(K, C, π)`, independent of the event time.
///
/// Examination times are cumulative sums of independent gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionScheme {
    pub k_dist: CountDist,
    pub gap_dist: GapDist,
    pub pi: PiRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
}

/// One realized inspection process.
#[derive(Debug, Clone, PartialEq)]
pub struct Inspection {
    /// `C_1 < … < C_K`.
    pub times: Vec<f64>,
    /// `π_0, …, π_K`.
    pub pi: Vec<f64>,
}

impl InspectionScheme {
    pub fn new(k_dist: CountDist, gap_dist: GapDist, pi: PiRule) -> Result<Self> {
        let s = InspectionScheme {
            k_dist,
            gap_dist,
            pi,
            preset: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.k_dist.validate()?;
        self.gap_dist.validate()?;
        self.pi.validate()?;
        if let Some(p) = self.preset {
            let fixed = self.k_dist.fixed();
            let expected = match p {
                Preset::S2 | Preset::S3 | Preset::S5 => Some(1),
                Preset::S4 => Some(2),
                _ => None,
            };
            if expected.is_some() && fixed != expected {
                return Err(PsrError::InvalidScheme(format!("preset {p} fixes K = {}", expected.unwrap())));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: InspectionScheme = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn label(&self) -> String {
        self.preset.map(|p| p.label().to_string()).unwrap_or_else(|| "custom".into())
    }

    /// True when every event is observed exactly, whatever `(K, C)` is.
    pub fn always_exact(&self) -> bool {
        match &self.pi {
            PiRule::Constant(p) => *p == 1.0,
            PiRule::PerIndex(v) => v.iter().all(|p| *p == 1.0),
            PiRule::FollowUp { .. } => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Inspection {
        let k = self.k_dist.sample(rng);
        let mut times = Vec::with_capacity(k);
        let mut c = 0.0;
        for _ in 0..k {
            let mut gap = self.gap_dist.sample(rng);
            if !(gap > 0.0) {
                gap = f64::MIN_POSITIVE;
            }
            let next = c + gap;
            // keep strictly increasing under rounding
            c = if next > c { next } else { c.next_up() };
            times.push(c);
        }
        Inspection {
            times,
            pi: self.pi.probabilities(k),
        }
    }
}
