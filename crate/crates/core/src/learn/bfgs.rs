//! Quasi-Newton minimisation with a strong-Wolfe line search.
//!
//! Small problems keep a dense inverse-Hessian approximation. Above
//! `DENSE_LIMIT` unknowns the dense matrix would not fit comfortably in
//! memory, so the same iteration runs on the limited-memory two-loop form.

use std::collections::VecDeque;

pub const DENSE_LIMIT: usize = 2048;
const LBFGS_MEMORY: usize = 10;
const MAX_LINE_SEARCH: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub c1: f64,
    pub c2: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            grad_tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + alpha * b).collect()
}

enum Curvature {
    Dense { h: Vec<f64>, n: usize, scaled: bool },
    Limited { pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> },
}

impl Curvature {
    fn new(n: usize) -> Self {
        if n <= DENSE_LIMIT {
            let mut h = vec![0.0; n * n];
            (0..n).for_each(|i| h[i * n + i] = 1.0);
            Curvature::Dense { h, n, scaled: false }
        } else {
            Curvature::Limited {
                pairs: VecDeque::new(),
            }
        }
    }

    fn reset(&mut self) {
        match self {
            Curvature::Dense { h, n, scaled } => {
                h.iter_mut().for_each(|v| *v = 0.0);
                (0..*n).for_each(|i| h[i * *n + i] = 1.0);
                *scaled = false;
            }
            Curvature::Limited { pairs } => pairs.clear(),
        }
    }

    /// `-H g`
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        match self {
            Curvature::Dense { h, n, .. } => (0..*n)
                .map(|i| -dot(&h[i * n..(i + 1) * n], g))
                .collect(),
            Curvature::Limited { pairs } => {
                let mut q = g.to_vec();
                let mut alphas = Vec::with_capacity(pairs.len());
                for (s, y, rho) in pairs.iter().rev() {
                    let a = rho * dot(s, &q);
                    q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
                    alphas.push(a);
                }
                if let Some((s, y, _)) = pairs.back() {
                    let gamma = dot(s, y) / dot(y, y);
                    q.iter_mut().for_each(|v| *v *= gamma);
                }
                for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
                    let b = rho * dot(y, &q);
                    q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
                }
                q.iter_mut().for_each(|v| *v = -*v);
                q
            }
        }
    }

    fn update(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-12 * norm(&s) * norm(&y) {
            return;
        }
        let rho = 1.0 / sy;
        match self {
            Curvature::Dense { h, n, scaled } => {
                let n = *n;
                if !*scaled {
                    let gamma = sy / dot(&y, &y);
                    h.iter_mut().for_each(|v| *v *= gamma);
                    *scaled = true;
                }
                let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
                let yhy = dot(&y, &hy);
                let c = rho * rho * yhy + rho;
                for i in 0..n {
                    let row = &mut h[i * n..(i + 1) * n];
                    for j in 0..n {
                        row[j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                    }
                }
            }
            Curvature::Limited { pairs } => {
                if pairs.len() == LBFGS_MEMORY {
                    pairs.pop_front();
                }
                pairs.push_back((s, y, rho));
            }
        }
    }
}

struct Point {
    alpha: f64,
    value: f64,
    grad: Vec<f64>,
    slope: f64,
}

/// Strong-Wolfe bracketing and zoom. Returns `None` if no acceptable step
/// was found.
fn line_search<F>(
    f: &mut F,
    x: &[f64],
    p: &[f64],
    f0: f64,
    d0: f64,
    alpha0: f64,
    opts: &BfgsOptions,
) -> Option<Point>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut eval = |alpha: f64| {
        let (value, grad) = f(&axpy(x, alpha, p));
        let slope = dot(&grad, p);
        Point {
            alpha,
            value,
            grad,
            slope,
        }
    };
    let armijo = |pt: &Point| pt.value <= f0 + opts.c1 * pt.alpha * d0;
    let curvature = |pt: &Point| pt.slope.abs() <= -opts.c2 * d0;

    let mut prev = Point {
        alpha: 0.0,
        value: f0,
        grad: Vec::new(),
        slope: d0,
    };
    let mut alpha = alpha0;
    let mut evals = 0;
    let (mut lo, mut hi) = loop {
        let pt = eval(alpha);
        evals += 1;
        if !pt.value.is_finite() || !armijo(&pt) || (evals > 1 && pt.value >= prev.value) {
            break (prev, pt);
        }
        if curvature(&pt) {
            return Some(pt);
        }
        if pt.slope >= 0.0 {
            break (pt, prev);
        }
        if evals >= MAX_LINE_SEARCH {
            return Some(pt);
        }
        alpha *= 2.0;
        prev = pt;
    };

    // zoom: `lo` always satisfies Armijo and has the lowest value seen
    while evals < MAX_LINE_SEARCH {
        let (a, b) = (lo.alpha, hi.alpha);
        let mut trial = if hi.value.is_finite() {
            // minimiser of the quadratic through lo (value, slope) and hi (value)
            let d = b - a;
            let denom = 2.0 * (hi.value - lo.value - lo.slope * d);
            if denom > 0.0 {
                a - lo.slope * d * d / denom
            } else {
                0.5 * (a + b)
            }
        } else {
            0.5 * (a + b)
        };
        let (left, right) = (a.min(b), a.max(b));
        let margin = 0.1 * (right - left);
        if !(trial > left + margin && trial < right - margin) {
            trial = 0.5 * (a + b);
        }
        let pt = eval(trial);
        evals += 1;
        if !pt.value.is_finite() || !armijo(&pt) || pt.value >= lo.value {
            hi = pt;
        } else {
            if curvature(&pt) {
                return Some(pt);
            }
            if pt.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = pt;
        }
        if (hi.alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1.0) {
            break;
        }
    }
    // fall back to the best Armijo point, if we moved at all
    (lo.alpha > 0.0).then_some(lo)
}

/// Minimises `f`, which returns the value and gradient at a point.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &BfgsOptions) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut value, mut grad) = f(&x);
    let mut curv = Curvature::new(n);
    let mut iterations = 0;
    let mut fresh = true;

    while iterations < opts.max_iter {
        let gnorm = norm(&grad);
        if gnorm <= opts.grad_tol {
            break;
        }
        let mut p = curv.direction(&grad);
        let mut d0 = dot(&grad, &p);
        if !(d0 < 0.0) {
            curv.reset();
            fresh = true;
            p = grad.iter().map(|g| -g).collect();
            d0 = -gnorm * gnorm;
        }
        let alpha0 = if fresh { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let step = match line_search(&mut f, &x, &p, value, d0, alpha0, opts) {
            Some(pt) => pt,
            None if !fresh => {
                curv.reset();
                fresh = true;
                continue;
            }
            None => break,
        };
        iterations += 1;
        let s: Vec<f64> = p.iter().map(|v| step.alpha * v).collect();
        let y: Vec<f64> = step.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        x.iter_mut().zip(&s).for_each(|(xi, si)| *xi += si);
        let improvement = value - step.value;
        value = step.value;
        grad = step.grad;
        curv.update(s, y);
        fresh = false;
        if !(improvement > 0.0) {
            break;
        }
    }
    let grad_norm = norm(&grad);
    Minimum {
        x,
        value,
        grad_norm,
        iterations,
        converged: grad_norm <= opts.grad_tol,
    }
}
