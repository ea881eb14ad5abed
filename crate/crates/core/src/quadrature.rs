//! Gauss–Legendre quadrature on finite and semi-infinite intervals.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, nodes found by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f(x) dx` for finite `a < b`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// `∫_a^∞ f(t) dt` via `t = a + x/(1-x)`, `x ∈ [0, 1)`.
    pub fn integrate_to_infinity<F: Fn(f64) -> f64>(&self, a: f64, f: F) -> f64 {
        self.integrate(0.0, 1.0, |x| {
            let one_minus = 1.0 - x;
            let t = a + x / one_minus;
            let v = f(t);
            if v == 0.0 {
                0.0
            } else {
                v / (one_minus * one_minus)
            }
        })
    }

    /// `∫_a^b f` splitting `[a, ∞)` into `pieces` panels on the mapped scale.
    pub fn integrate_composite<F: Fn(f64) -> f64>(&self, a: f64, b: f64, pieces: usize, f: F) -> f64 {
        if b.is_infinite() {
            let g = |x: f64| {
                let one_minus = 1.0 - x;
                let v = f(a + x / one_minus);
                if v == 0.0 {
                    0.0
                } else {
                    v / (one_minus * one_minus)
                }
            };
            panels(0.0, 1.0, pieces).map(|(lo, hi)| self.integrate(lo, hi, g)).sum()
        } else {
            panels(a, b, pieces).map(|(lo, hi)| self.integrate(lo, hi, &f)).sum()
        }
    }
}

fn panels(a: f64, b: f64, pieces: usize) -> impl Iterator<Item = (f64, f64)> {
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    (0..pieces).map(move |k| (a + k as f64 * h, if k + 1 == pieces { b } else { a + (k + 1) as f64 * h }))
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
