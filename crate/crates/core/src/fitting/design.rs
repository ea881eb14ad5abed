//! Covariate terms and their expansion into design columns.
//!
//! A term is written as `x`, `sqrt(x)`, `log(x)`, `pl(g, k1, k2, ...)` for a
//! piecewise-linear basis with the given break points, or `ns(g, m)` for a
//! natural (restricted) cubic spline with `m` knots at fixed quantiles of the
//! data. `g` is a variable name or a `sqrt`/`log` transform of one.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{PsrError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Sqrt,
    Log,
}

impl Transform {
    fn apply(self, name: &str, x: f64) -> Result<f64> {
        match self {
            Transform::Identity => Ok(x),
            Transform::Sqrt if x >= 0.0 => Ok(x.sqrt()),
            Transform::Log if x > 0.0 => Ok(x.ln()),
            _ => Err(PsrError::InvalidParameter(format!(
                "cannot apply {self:?} to `{name}` value {x}"
            ))),
        }
    }

    fn wrap(self, name: &str) -> String {
        match self {
            Transform::Identity => name.to_string(),
            Transform::Sqrt => format!("sqrt({name})"),
            Transform::Log => format!("log({name})"),
        }
    }
}

/// Basis applied to the transformed variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Linear,
    /// `g` plus `(g - k)+` for each break point.
    PiecewiseLinear { knots: Vec<f64> },
    /// Knot count only; positions are chosen from the data when resolved.
    NaturalSplineQuantile { knots: usize },
    /// `g` plus `m - 2` restricted cubic terms.
    NaturalSpline { knots: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub variable: String,
    pub transform: Transform,
    pub basis: Basis,
}

impl Term {
    pub fn linear(variable: impl Into<String>) -> Self {
        Term {
            variable: variable.into(),
            transform: Transform::Identity,
            basis: Basis::Linear,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || PsrError::InvalidParameter(format!("cannot parse covariate term `{text}`"));
        if let Some(inner) = strip_call(text, "pl") {
            let mut parts = split_args(inner);
            if parts.len() < 2 {
                return Err(bad());
            }
            let head = parts.remove(0);
            let (variable, transform) = parse_transformed(head).ok_or_else(bad)?;
            let mut knots = parts
                .iter()
                .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            knots.sort_by(f64::total_cmp);
            return Ok(Term {
                variable,
                transform,
                basis: Basis::PiecewiseLinear { knots },
            });
        }
        if let Some(inner) = strip_call(text, "ns") {
            let parts = split_args(inner);
            if parts.len() != 2 {
                return Err(bad());
            }
            let (variable, transform) = parse_transformed(parts[0]).ok_or_else(bad)?;
            let knots: usize = parts[1].trim().parse().map_err(|_| bad())?;
            if knots < 3 {
                return Err(PsrError::InvalidParameter("natural spline needs at least 3 knots".into()));
            }
            return Ok(Term {
                variable,
                transform,
                basis: Basis::NaturalSplineQuantile { knots },
            });
        }
        let (variable, transform) = parse_transformed(text).ok_or_else(bad)?;
        Ok(Term {
            variable,
            transform,
            basis: Basis::Linear,
        })
    }

    fn column_names(&self) -> Vec<String> {
        let g = self.transform.wrap(&self.variable);
        match &self.basis {
            Basis::Linear => vec![g],
            Basis::PiecewiseLinear { knots } => std::iter::once(g.clone())
                .chain(knots.iter().map(|k| format!("({g}-{k})+")))
                .collect(),
            Basis::NaturalSpline { knots } => std::iter::once(g.clone())
                .chain((1..knots.len() - 1).map(|j| format!("ns({g})[{j}]")))
                .collect(),
            Basis::NaturalSplineQuantile { knots } => std::iter::once(g.clone())
                .chain((1..knots - 1).map(|j| format!("ns({g})[{j}]")))
                .collect(),
        }
    }

    fn expand(&self, raw: f64, out: &mut Vec<f64>) -> Result<()> {
        let g = self.transform.apply(&self.variable, raw)?;
        out.push(g);
        match &self.basis {
            Basis::Linear => {}
            Basis::PiecewiseLinear { knots } => out.extend(knots.iter().map(|k| (g - k).max(0.0))),
            Basis::NaturalSpline { knots } => out.extend(restricted_cubic(g, knots)),
            Basis::NaturalSplineQuantile { .. } => {
                return Err(PsrError::InvalidParameter("spline knots not resolved".into()));
            }
        }
        Ok(())
    }
}

fn strip_call<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    let rest = text.strip_prefix(name)?.trim_start();
    rest.strip_prefix('(')?.strip_suffix(')')
}

fn split_args(inner: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(inner[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(inner[start..].trim());
    parts
}

fn parse_transformed(text: &str) -> Option<(String, Transform)> {
    let text = text.trim();
    let (name, t) = if let Some(inner) = strip_call(text, "sqrt") {
        (inner.trim(), Transform::Sqrt)
    } else if let Some(inner) = strip_call(text, "log") {
        (inner.trim(), Transform::Log)
    } else {
        (text, Transform::Identity)
    };
    let valid = !name.is_empty() && !name.contains(['(', ')', ',']);
    valid.then(|| (name.to_string(), t))
}

/// Restricted cubic spline terms for knots `t_1 < … < t_m`, scaled by
/// `(t_m - t_1)²`; linear beyond the boundary knots.
pub fn restricted_cubic(x: f64, knots: &[f64]) -> Vec<f64> {
    let m = knots.len();
    let (tk, tk1) = (knots[m - 1], knots[m - 2]);
    let norm = (tk - knots[0]).powi(2);
    let cube = |v: f64| v.max(0.0).powi(3);
    (0..m - 2)
        .map(|j| {
            let tj = knots[j];
            (cube(x - tj) - cube(x - tk1) * (tk - tj) / (tk - tk1) + cube(x - tk) * (tk1 - tj) / (tk - tk1)) / norm
        })
        .collect()
}

/// Quantile levels for `m` knots: 0.10/0.50/0.90 for three knots,
/// otherwise evenly spread over `[0.05, 0.95]`.
pub fn knot_levels(m: usize) -> Vec<f64> {
    match m {
        3 => vec![0.10, 0.50, 0.90],
        4 => vec![0.05, 0.35, 0.65, 0.95],
        5 => vec![0.05, 0.275, 0.5, 0.725, 0.95],
        _ => (0..m).map(|i| 0.05 + 0.9 * i as f64 / (m - 1) as f64).collect(),
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// A list of terms with all data-dependent choices fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub terms: Vec<Term>,
}

impl Design {
    /// Every dataset covariate entered linearly.
    pub fn linear(data: &Dataset) -> Self {
        Design {
            terms: data.covariate_names().iter().map(Term::linear).collect(),
        }
    }

    pub fn parse(terms: &[impl AsRef<str>]) -> Result<Self> {
        Ok(Design {
            terms: terms.iter().map(|t| Term::parse(t.as_ref())).collect::<Result<_>>()?,
        })
    }

    /// Places quantile-based spline knots using `data`.
    pub fn resolve(&self, data: &Dataset) -> Result<Design> {
        let terms = self
            .terms
            .iter()
            .map(|term| {
                let col = data
                    .covariate_column(&term.variable)
                    .ok_or_else(|| PsrError::InvalidParameter(format!("unknown covariate `{}`", term.variable)))?;
                if let Basis::NaturalSplineQuantile { knots } = term.basis {
                    let mut g = col
                        .iter()
                        .map(|&x| term.transform.apply(&term.variable, x))
                        .collect::<Result<Vec<_>>>()?;
                    g.sort_by(f64::total_cmp);
                    let positions: Vec<f64> = knot_levels(knots).iter().map(|&p| quantile_sorted(&g, p)).collect();
                    if positions.windows(2).any(|w| !(w[0] < w[1])) {
                        return Err(PsrError::InvalidParameter(format!(
                            "too few distinct values of `{}` for {knots} knots",
                            term.variable
                        )));
                    }
                    Ok(Term {
                        basis: Basis::NaturalSpline { knots: positions },
                        ..term.clone()
                    })
                } else {
                    Ok(term.clone())
                }
            })
            .collect::<Result<_>>()?;
        Ok(Design { terms })
    }

    pub fn column_names(&self) -> Vec<String> {
        self.terms.iter().flat_map(Term::column_names).collect()
    }

    pub fn width(&self) -> usize {
        self.column_names().len()
    }

    /// Raw variables needed from the data.
    pub fn variables(&self) -> Vec<String> {
        let mut v: Vec<String> = Vec::new();
        for t in &self.terms {
            if !v.contains(&t.variable) {
                v.push(t.variable.clone());
            }
        }
        v
    }

    /// Design rows for every observation, in row order.
    pub fn matrix(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        let idx = self
            .terms
            .iter()
            .map(|t| {
                data.covariate_index(&t.variable)
                    .ok_or_else(|| PsrError::InvalidParameter(format!("unknown covariate `{}`", t.variable)))
            })
            .collect::<Result<Vec<_>>>()?;
        data.observations()
            .iter()
            .map(|obs| {
                let mut row = Vec::new();
                for (t, &j) in self.terms.iter().zip(&idx) {
                    t.expand(obs.covariates[j], &mut row)?;
                }
                Ok(row)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_terms() {
        assert_eq!(Term::parse("age").unwrap(), Term::linear("age"));
        let t = Term::parse("sqrt(cd4)").unwrap();
        assert_eq!((t.variable.as_str(), t.transform), ("cd4", Transform::Sqrt));
        let t = Term::parse("pl(sqrt(cd4), 18)").unwrap();
        assert_eq!(t.basis, Basis::PiecewiseLinear { knots: vec![18.0] });
        assert_eq!(t.column_names(), vec!["sqrt(cd4)", "(sqrt(cd4)-18)+"]);
        let t = Term::parse("ns(log(x),4)").unwrap();
        assert_eq!(t.basis, Basis::NaturalSplineQuantile { knots: 4 });
        assert!(Term::parse("ns(x,2)").is_err());
        assert!(Term::parse("pl(x)").is_err());
        assert!(Term::parse("").is_err());
    }

    #[test]
    fn restricted_cubic_is_linear_beyond_boundary_knots() {
        let knots = [1.0, 2.0, 4.0];
        let f = |x: f64| restricted_cubic(x, &knots)[0];
        // zero below the first knot
        assert_eq!(f(0.5), 0.0);
        // second differences vanish to the right of the last knot
        let (a, b, c) = (f(5.0), f(6.0), f(7.0));
        assert!((a - 2.0 * b + c).abs() < 1e-12);
        assert!(f(3.0) > 0.0);
    }

    #[test]
    fn piecewise_linear_expansion() {
        let t = Term::parse("pl(x,1,3)").unwrap();
        let mut row = Vec::new();
        t.expand(2.0, &mut row).unwrap();
        assert_eq!(row, vec![2.0, 1.0, 0.0]);
        let t = Term::parse("sqrt(x)").unwrap();
        assert!(t.expand(-1.0, &mut Vec::new()).is_err());
    }

    #[test]
    fn knot_levels_are_increasing() {
        for m in 3..9 {
            let l = knot_levels(m);
            assert_eq!(l.len(), m);
            assert!(l.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
