//! Unconstrained minimizers: BFGS with a backtracking line search, and
//! Nelder–Mead.

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
}

impl OptimResult {
    pub fn gradient_norm(&self) -> f64 {
        inf_norm(&self.gradient)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iterations: usize,
    /// Relative change in the objective treated as a stall.
    pub rel_tol: f64,
    /// Infinity norm of the gradient treated as stationary.
    pub grad_tol: f64,
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which writes its gradient into the second argument.
/// Stops when the gradient is small, after ten consecutive iterations
/// with relative change below `rel_tol`, or when no descent step exists.
pub fn bfgs<F>(mut f: F, x0: &[f64], rule: StopRule) -> OptimResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    let mut h = identity(n);
    let mut fresh = true;
    let mut stalls = 0;
    let mut iterations = 0;

    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    while iterations < rule.max_iterations && inf_norm(&g) > rule.grad_tol {
        let mut d: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            h = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        // backtracking Armijo search; the first step is 1
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-20 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let f_new = f(&x_new, &mut g_new);
            evaluations += 1;
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                    if fresh {
                        let gamma = sy / dot(&y, &y);
                        for (i, row) in h.iter_mut().enumerate() {
                            row.iter_mut().for_each(|v| *v = 0.0);
                            row[i] = gamma;
                        }
                        fresh = false;
                    }
                    update_inverse_hessian(&mut h, &s, &y, sy);
                }
                let change = (fx - f_new).abs() / fx.abs().max(1e-300);
                stalls = if change < rule.rel_tol { stalls + 1 } else { 0 };
                x.copy_from_slice(&x_new);
                g.copy_from_slice(&g_new);
                fx = f_new;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            if fresh {
                break;
            }
            h = identity(n);
            fresh = true;
            continue;
        }
        if stalls >= 10 {
            break;
        }
    }
    OptimResult {
        x,
        value: fx,
        gradient: g,
        iterations,
        evaluations,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// `H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ` with `ρ = 1/(sᵀy)`.
fn update_inverse_hessian(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Derivative-free simplex search, restarted once from its best vertex.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, rule: StopRule) -> OptimResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0;
    let mut iterations = 0;
    let mut best = x0.to_vec();
    let budget = rule.max_iterations * (n + 1);
    for _restart in 0..2 {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut v = best.clone();
            if i > 0 {
                v[i - 1] += step;
            }
            let fv = f(&v);
            evaluations += 1;
            simplex.push((v, fv));
        }
        let mut local = 0;
        while local < budget {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (f_lo, f_hi) = (simplex[0].1, simplex[n].1);
            if (f_hi - f_lo).abs() <= rule.rel_tol * (f_lo.abs() + 1e-300) {
                break;
            }
            local += 1;
            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64, worst: &[f64]| -> Vec<f64> {
                (0..n).map(|j| centroid[j] + t * (worst[j] - centroid[j])).collect()
            };
            let worst = simplex[n].0.clone();
            let xr = along(-1.0, &worst);
            let fr = f(&xr);
            evaluations += 1;
            if fr < simplex[0].1 {
                let xe = along(-2.0, &worst);
                let fe = f(&xe);
                evaluations += 1;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = along(-0.5, &worst);
                    let fc = f(&xc);
                    (xc, fc)
                } else {
                    let xc = along(0.5, &worst);
                    let fc = f(&xc);
                    (xc, fc)
                };
                evaluations += 1;
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let lo = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let v: Vec<f64> = (0..n).map(|j| lo[j] + 0.5 * (vertex.0[j] - lo[j])).collect();
                        let fv = f(&v);
                        evaluations += 1;
                        *vertex = (v, fv);
                    }
                }
            }
        }
        iterations += local;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        best = simplex[0].0.clone();
    }
    let value = f(&best);
    OptimResult {
        x: best,
        value,
        gradient: Vec::new(),
        iterations,
        evaluations: evaluations + 1,
    }
}
