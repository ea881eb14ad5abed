//! Residuals for exponential event times inspected on the fixed grid
//! `0, τ, 2τ, …`.
//!
//! With `q = exp(-λτ)` the event falls in `(kτ, (k+1)τ]` with
//! `k = ⌊T/τ⌋ ~ Geometric(1 - q)` on `{0, 1, …}`, and the residual of that
//! interval is `1 - q^k (1 + q)`.

use serde::{Deserialize, Serialize};

use crate::distributions::Family;
use crate::error::{PsrError, Result};
use crate::rng::{open01, sharded_map};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSetting {
    pub lambda: f64,
    pub tau: f64,
}

impl GridSetting {
    pub fn new(lambda: f64, tau: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0 && tau.is_finite() && tau > 0.0) {
            return Err(PsrError::InvalidParameter(format!(
                "grid needs positive finite lambda and tau, got {lambda}, {tau}"
            )));
        }
        Ok(GridSetting { lambda, tau })
    }

    pub fn rate_times_spacing(&self) -> f64 {
        self.lambda * self.tau
    }

    /// `q = exp(-λτ)`.
    pub fn q(&self) -> f64 {
        (-self.rate_times_spacing()).exp()
    }

    fn q_pow(&self, k: f64) -> f64 {
        (-k * self.rate_times_spacing()).exp()
    }
}

/// `1 - q^k (1 + q)`.
pub fn grid_psr(setting: &GridSetting, k: u64) -> f64 {
    1.0 - setting.q_pow(k as f64) * (1.0 + setting.q())
}

/// `F((k+1)τ) + F(kτ) - 1` evaluated through the exponential CDF.
pub fn grid_psr_direct(setting: &GridSetting, k: u64) -> f64 {
    let f = Family::Exponential { rate: setting.lambda };
    let t = k as f64 * setting.tau;
    f.cdf(t + setting.tau) + f.cdf(t) - 1.0
}

/// `Pr(k = j) = q^j (1 - q)`.
pub fn grid_atom_prob(setting: &GridSetting, k: u64) -> f64 {
    setting.q_pow(k as f64) * -(-setting.rate_times_spacing()).exp_m1()
}

/// Largest `k` with `grid_psr(k) <= x`, or `None` when `x` is below every atom.
fn atoms_at_or_below(setting: &GridSetting, x: f64) -> Option<u64> {
    let ratio = (1.0 - x) / (1.0 + setting.q());
    let u = -ratio.ln() / setting.rate_times_spacing();
    let mut k: i64 = if u.is_finite() { u.floor() as i64 } else { i64::MAX / 2 };
    // settle rounding at atom boundaries against the atom values themselves
    while k >= 0 && grid_psr(setting, k as u64) > x {
        k -= 1;
    }
    while grid_psr(setting, (k + 1) as u64) <= x {
        k += 1;
    }
    (k >= 0).then_some(k as u64)
}

/// `Pr(R ≤ x)` for `x ∈ (-1, 1)`: `1 - q^{⌊u⌋+1}` with
/// `u = -(1/(λτ)) log((1-x)/(1+q))`, and `0` below the smallest atom.
pub fn grid_psr_cdf(setting: &GridSetting, x: f64) -> Result<f64> {
    if !(x > -1.0 && x < 1.0) {
        return Err(PsrError::InvalidParameter(format!("x must lie in (-1, 1), got {x}")));
    }
    Ok(match atoms_at_or_below(setting, x) {
        None => 0.0,
        Some(k) => -(-((k + 1) as f64) * setting.rate_times_spacing()).exp_m1(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAtom {
    pub k: u64,
    pub psr: f64,
    pub prob: f64,
    pub cdf: f64,
}

/// Atoms `k = 0..=k_max` with their probabilities and cumulative probabilities.
pub fn grid_atoms(setting: &GridSetting, k_max: u64) -> Vec<GridAtom> {
    (0..=k_max)
        .map(|k| GridAtom {
            k,
            psr: grid_psr(setting, k),
            prob: grid_atom_prob(setting, k),
            cdf: -(-((k + 1) as f64) * setting.rate_times_spacing()).exp_m1(),
        })
        .collect()
}

/// `{-0.99, -0.98, …, 0.99}`.
pub fn default_x_grid() -> Vec<f64> {
    (-99..=99).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub tau: f64,
    pub sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub lambda: f64,
    pub rows: Vec<LimitRow>,
    pub strictly_decreasing: bool,
}

/// Largest `|Pr(R ≤ x) - (x+1)/2|` over `xs`.
pub fn uniform_sup_distance(setting: &GridSetting, xs: &[f64]) -> Result<f64> {
    xs.iter().try_fold(0.0f64, |acc, &x| {
        Ok(acc.max((grid_psr_cdf(setting, x)? - 0.5 * (x + 1.0)).abs()))
    })
}

/// Distance to the `U(-1, 1)` CDF for each spacing in `taus`.
pub fn grid_limit_check(lambda: f64, taus: &[f64], xs: &[f64]) -> Result<LimitReport> {
    let rows = taus
        .iter()
        .map(|&tau| {
            let s = GridSetting::new(lambda, tau)?;
            Ok(LimitRow {
                tau,
                sup_distance: uniform_sup_distance(&s, xs)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let strictly_decreasing = rows.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance);
    Ok(LimitReport {
        lambda,
        rows,
        strictly_decreasing,
    })
}

/// Draws `n` residuals: `T ~ Exp(λ)`, `k = ⌊T/τ⌋`, `R = grid_psr(k)`.
pub fn simulate_grid_psr(setting: &GridSetting, n: usize, seed: u64) -> Vec<f64> {
    sharded_map(n, &[seed], |_, rngs| {
        let t = -open01(&mut rngs[0]).ln() / setting.lambda;
        grid_psr(setting, (t / setting.tau).floor() as u64)
    })
}

/// Kolmogorov–Smirnov distance between a sample and the exact grid CDF.
///
/// The sample lives on the atoms, so the supremum is attained at an atom or
/// just below one.
pub fn grid_ks(setting: &GridSetting, samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(PsrError::InsufficientData("empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let k = atoms_at_or_below(setting, v)
            .ok_or_else(|| PsrError::InvalidParameter(format!("{v} is not a grid residual")))?;
        let below_exact = 1.0 - setting.q_pow(k as f64);
        let at_exact = 1.0 - setting.q_pow((k + 1) as f64);
        d = d.max((i as f64 / n - below_exact).abs()).max((j as f64 / n - at_exact).abs());
        i = j;
    }
    // above the largest sample value the empirical CDF is 1
    Ok(d)
}
