//! Small dense minimizer for sequences of smooth problems.
//!
//! A family `f(x, t)` is minimized for a geometric sequence of parameters
//! `t` (penalty weights or barrier widths); each member is solved with BFGS
//! and an Armijo backtracking line search, warm-started from the previous
//! solution. Non-finite values are rejected by the line search, so barrier
//! functions may return `+inf` outside their domain.

/// Parameter schedule and inner-solver limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceOptions {
    pub start: f64,
    pub factor: f64,
    pub outer_iterations: usize,
    pub max_inner: usize,
    /// Inner convergence: infinity norm of the gradient.
    pub grad_tol: f64,
}

impl SequenceOptions {
    /// Quadratic penalty weights `100, 1e3, ..., 1e7`.
    pub fn penalty() -> Self {
        Self { start: 100.0, factor: 10.0, outer_iterations: 6, max_inner: 400, grad_tol: 1e-8 }
    }

    /// Log-barrier widths `1e-4, 1e-5, ..., 1e-10`.
    pub fn barrier() -> Self {
        Self { start: 1e-4, factor: 0.1, outer_iterations: 7, max_inner: 200, grad_tol: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Minimizes `f(x, t, grad)` along the schedule of `t`.
///
/// `f` returns the objective at parameter `t` and writes its gradient into
/// `grad`. The reported convergence is that of the last member.
pub fn minimize_sequence<F>(f: F, x0: &[f64], opts: &SequenceOptions) -> Minimum
where
    F: Fn(&[f64], f64, &mut [f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut t = opts.start;
    let mut evaluations = 0;
    let mut converged = true;
    let mut value = f64::NAN;
    for _ in 0..opts.outer_iterations.max(1) {
        let inner = bfgs(|z, g| f(z, t, g), &x, opts.max_inner, opts.grad_tol);
        x = inner.x;
        value = inner.value;
        evaluations += inner.evaluations;
        converged = inner.converged;
        t *= opts.factor;
    }
    Minimum { x, value, converged, evaluations }
}

/// Unconstrained BFGS with Armijo backtracking.
pub fn bfgs<F>(f: F, x0: &[f64], max_iter: usize, grad_tol: f64) -> Minimum
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    const ARMIJO: f64 = 1e-4;
    const MAX_HALVINGS: usize = 60;

    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    let mut h = identity(n);
    let mut fresh = true;

    let mut dir = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut stall = 0;

    for _ in 0..max_iter {
        if inf_norm(&g) <= grad_tol {
            return Minimum { x, value: fx, converged: true, evaluations };
        }
        mat_vec_neg(&h, &g, &mut dir);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            h = identity(n);
            fresh = true;
            for (d, gi) in dir.iter_mut().zip(&g) {
                *d = -gi;
            }
            slope = dot(&g, &dir);
        }

        let mut t = 1.0;
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                x_new[i] = x[i] + t * dir[i];
            }
            f_new = f(&x_new, &mut g_new);
            evaluations += 1;
            if f_new.is_finite() && f_new <= fx + ARMIJO * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if fresh {
                // Steepest descent made no progress: numerically stationary.
                return Minimum { x, value: fx, converged: inf_norm(&g) <= grad_tol.sqrt(), evaluations };
            }
            h = identity(n);
            fresh = true;
            continue;
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * norm(&s) * norm(&y) && sy > 0.0 {
            if fresh {
                let scale = sy / dot(&y, &y);
                for (i, row) in h.iter_mut().enumerate() {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    row[i] = scale;
                }
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }

        let decrease = fx - f_new;
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        fx = f_new;

        if decrease <= 1e-16 * (1.0 + fx.abs()) {
            stall += 1;
            if stall >= 5 {
                return Minimum { x, value: fx, converged: inf_norm(&g) <= grad_tol.sqrt(), evaluations };
            }
        } else {
            stall = 0;
        }
    }
    let converged = inf_norm(&g) <= grad_tol;
    Minimum { x, value: fx, converged, evaluations }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn mat_vec_neg(h: &[Vec<f64>], g: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(h) {
        *o = -dot(row, g);
    }
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
