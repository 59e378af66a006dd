//! Quasi-Newton minimization with central-difference gradients.
//!
//! BFGS on the inverse Hessian with a strong-Wolfe line search (bracketing
//! followed by safeguarded cubic zoom).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeConfig {
    pub max_iter: usize,
    /// Stop when the gradient ∞-norm drops below this.
    pub grad_tol: f64,
    /// Stop when the relative objective change drops below this and the
    /// gradient ∞-norm is below `rel_grad_tol`.
    pub rel_tol: f64,
    pub rel_grad_tol: f64,
    /// Central-difference step is `fd_step * (1 + |θ_i|)`.
    pub fd_step: f64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            grad_tol: 1e-6,
            rel_tol: 1e-10,
            rel_grad_tol: 1e-4,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    RelativeChange,
    MaxIterations,
    /// No step along the search direction improved the objective.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    pub trace: Vec<TracePoint>,
}

impl Minimum {
    pub fn grad_norm(&self) -> f64 {
        inf_norm(&self.grad)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, g| m.max(g.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central-difference gradient with step `h (1 + |x_i|)`.
pub fn numeric_gradient<F>(f: &mut F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        probe[i] = x[i] + step;
        let up = f(&probe)?;
        probe[i] = x[i] - step;
        let down = f(&probe)?;
        probe[i] = x[i];
        // Use the realized step so rounding in x + step cancels.
        let width = (x[i] + step) - (x[i] - step);
        grad.push((up - down) / width);
    }
    Ok(grad)
}

struct Problem<F> {
    f: F,
    fd_step: f64,
}

impl<F> Problem<F>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    /// Objective, mapping rejected points to +∞ so the line search backs off.
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        match (self.f)(x) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Ok(f64::INFINITY),
            Err(Error::LogDiagonalBound { .. }) | Err(Error::NotPositiveDefinite { .. }) => {
                Ok(f64::INFINITY)
            }
            Err(e) => Err(e),
        }
    }

    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        numeric_gradient(&mut self.f, x, self.fd_step)
    }
}

struct LinePoint {
    step: f64,
    value: f64,
    slope: f64,
    grad: Vec<f64>,
}

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;

fn axpy(x: &[f64], step: f64, dir: &[f64]) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, d)| a + step * d).collect()
}

/// Minimizer of the cubic through two points with values and slopes,
/// clamped inside `[lo, hi]` away from the ends.
fn cubic_min(a: &LinePoint, b: &LinePoint) -> f64 {
    let (lo, hi) = if a.step < b.step { (a.step, b.step) } else { (b.step, a.step) };
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
    let disc = d1 * d1 - a.slope * b.slope;
    let mid = 0.5 * (lo + hi);
    if !(disc >= 0.0) || !a.value.is_finite() || !b.value.is_finite() {
        return mid;
    }
    let d2 = (b.step - a.step).signum() * disc.sqrt();
    let t = b.step - (b.step - a.step) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}

fn line_search<F>(
    problem: &mut Problem<F>,
    x: &[f64],
    f0: f64,
    slope0: f64,
    dir: &[f64],
    initial: f64,
) -> Result<Option<LinePoint>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let eval = |problem: &mut Problem<F>, step: f64| -> Result<LinePoint> {
        let xt = axpy(x, step, dir);
        let value = problem.value(&xt)?;
        if value.is_finite() {
            let grad = problem.gradient(&xt)?;
            let slope = dot(&grad, dir);
            Ok(LinePoint {
                step,
                value,
                slope,
                grad,
            })
        } else {
            Ok(LinePoint {
                step,
                value,
                slope: f64::NAN,
                grad: Vec::new(),
            })
        }
    };
    let origin = LinePoint {
        step: 0.0,
        value: f0,
        slope: slope0,
        grad: Vec::new(),
    };
    let armijo = |p: &LinePoint| p.value <= f0 + WOLFE_C1 * p.step * slope0;
    let curvature = |p: &LinePoint| p.slope.abs() <= -WOLFE_C2 * slope0;

    let mut prev = origin;
    let mut step = initial;
    let mut first = true;
    let (mut lo, mut hi);
    loop {
        let cur = eval(problem, step)?;
        if !cur.value.is_finite() {
            // Infeasible: shrink toward the last good point.
            if step - prev.step < 1e-16 {
                return Ok(None);
            }
            step = prev.step + 0.25 * (step - prev.step);
            continue;
        }
        if !armijo(&cur) || (!first && cur.value >= prev.value) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature(&cur) {
            return Ok(Some(cur));
        }
        if cur.slope >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        first = false;
        prev = cur;
        step *= 2.0;
        if step > 1e10 {
            return Ok(Some(prev));
        }
    }
    // Zoom; `lo` always satisfies Armijo and has the lowest value so far.
    for _ in 0..60 {
        let trial = cubic_min(&lo, &hi);
        let cur = eval(problem, trial)?;
        if !cur.value.is_finite() || !armijo(&cur) || cur.value >= lo.value {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
        if (hi.step - lo.step).abs() < 1e-14 * lo.step.abs().max(1e-8) {
            break;
        }
    }
    if lo.step > 0.0 {
        Ok(Some(lo))
    } else {
        Ok(None)
    }
}

/// Minimizes `f` from `x0`.
///
/// `f` may reject a point by returning [`Error::LogDiagonalBound`] or
/// [`Error::NotPositiveDefinite`]; such points are treated as +∞. Any other
/// error aborts the run. The starting point must be feasible.
pub fn minimize<F>(f: F, x0: &[f64], config: &MinimizeConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let mut problem = Problem {
        f,
        fd_step: config.fd_step,
    };
    let mut x = x0.to_vec();
    let mut fx = (problem.f)(&x)?;
    if !fx.is_finite() {
        return Err(Error::LineSearch);
    }
    let mut grad = problem.gradient(&x)?;
    let mut hinv: Vec<f64> = identity(n);
    let mut scaled = false;
    let mut trace = vec![TracePoint {
        iteration: 0,
        value: fx,
        grad_norm: inf_norm(&grad),
    }];
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut restarted = false;

    while iterations < config.max_iter {
        if inf_norm(&grad) < config.grad_tol {
            stop = StopReason::Gradient;
            break;
        }
        let mut dir: Vec<f64> = (0..n)
            .map(|i| -(0..n).map(|j| hinv[i * n + j] * grad[j]).sum::<f64>())
            .collect();
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            hinv = identity(n);
            scaled = false;
            dir = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &dir);
        }
        let initial = if scaled {
            1.0
        } else {
            (1.0 / inf_norm(&grad)).min(1.0)
        };
        let point = line_search(&mut problem, &x, fx, slope, &dir, initial)?;
        let Some(point) = point else {
            if restarted || !scaled {
                stop = StopReason::Stalled;
                break;
            }
            // Retry once along steepest descent with a fresh metric.
            hinv = identity(n);
            scaled = false;
            restarted = true;
            continue;
        };
        restarted = false;
        iterations += 1;
        let s: Vec<f64> = dir.iter().map(|d| point.step * d).collect();
        let yv: Vec<f64> = point.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        let f_prev = fx;
        x = axpy(&x, point.step, &dir);
        fx = point.value;
        grad = point.grad;
        trace.push(TracePoint {
            iteration: iterations,
            value: fx,
            grad_norm: inf_norm(&grad),
        });
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() {
            if !scaled {
                // Scale the initial metric before the first update.
                let gamma = sy / dot(&yv, &yv);
                hinv = identity(n).into_iter().map(|v| v * gamma).collect();
                scaled = true;
            }
            bfgs_update(&mut hinv, &s, &yv, sy);
        }
        if inf_norm(&grad) < config.grad_tol {
            stop = StopReason::Gradient;
            break;
        }
        if (f_prev - fx).abs() <= config.rel_tol * fx.abs().max(1.0)
            && inf_norm(&grad) < config.rel_grad_tol
        {
            stop = StopReason::RelativeChange;
            break;
        }
    }
    Ok(Minimum {
        x,
        value: fx,
        grad,
        iterations,
        stop,
        trace,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// `H ← (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
