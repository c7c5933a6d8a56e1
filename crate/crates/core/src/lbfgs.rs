//! Limited-memory BFGS with a backtracking (Armijo) line search.
//!
//! The search direction comes from the standard two-loop recursion over the
//! last `memory` curvature pairs `(s, y)`, with the initial inverse Hessian
//! scaled by `s'y / y'y`. Every accepted step satisfies sufficient decrease,
//! so the objective never increases.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop once the Euclidean norm of the gradient falls below this.
    pub grad_tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { memory: 10, max_iters: 200, grad_tol: 1e-6 }
    }
}

impl LbfgsConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.memory == 0 || self.max_iters == 0 || !(self.grad_tol >= 0.0) {
            return Err(Error::Config(
                "L-BFGS needs memory >= 1, max_iters >= 1 and a non-negative gradient tolerance"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    /// The line search could not decrease the objective any further.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct LbfgsReport {
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` starting from `x`, which is overwritten with the result.
///
/// `f(x, grad)` returns the objective at `x` and writes its gradient.
pub fn minimize<F>(x: &mut [f64], cfg: &LbfgsConfig, mut f: F) -> Result<LbfgsReport>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    cfg.validate()?;
    let dim = x.len();
    let mut grad = vec![0.0; dim];
    let mut value = f(x, &mut grad);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut dir = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];
    let mut alpha = vec![0.0; cfg.memory];

    let mut iterations = 0;
    let termination = loop {
        let grad_norm = libm::sqrt(dot(&grad, &grad));
        if grad_norm <= cfg.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations == cfg.max_iters {
            break Termination::MaxIterations;
        }

        two_loop(&grad, &history, &mut alpha, &mut dir);
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            // Not a descent direction: drop the curvature memory.
            history.clear();
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            slope = -grad_norm * grad_norm;
        }
        // First step without curvature information is normalized.
        let mut step = if history.is_empty() { (1.0 / grad_norm).min(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..dim {
                trial[i] = x[i] + step * dir[i];
            }
            let v = f(&trial, &mut trial_grad);
            if v.is_finite() && v <= value + ARMIJO_C1 * step * slope {
                accepted = Some(v);
                break;
            }
            step *= BACKTRACK;
        }
        let Some(new_value) = accepted else {
            break Termination::Stalled;
        };

        let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * libm::sqrt(dot(&s, &s) * dot(&y, &y)) && sy > 0.0 {
            if history.len() == cfg.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x.copy_from_slice(&trial);
        grad.copy_from_slice(&trial_grad);
        let improved = new_value < value;
        value = new_value;
        iterations += 1;
        if !improved {
            break Termination::Stalled;
        }
    };

    Ok(LbfgsReport {
        value,
        grad_norm: libm::sqrt(dot(&grad, &grad)),
        iterations,
        termination,
    })
}

/// `dir = -H grad` via the two-loop recursion.
fn two_loop(
    grad: &[f64],
    history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    alpha: &mut [f64],
    dir: &mut [f64],
) {
    dir.iter_mut().zip(grad).for_each(|(d, g)| *d = -g);
    for (i, (s, y, rho)) in history.iter().enumerate().rev() {
        let a = rho * dot(s, dir);
        alpha[i] = a;
        dir.iter_mut().zip(y).for_each(|(d, yi)| *d -= a * yi);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        dir.iter_mut().for_each(|d| *d *= gamma);
    }
    for (i, (s, y, rho)) in history.iter().enumerate() {
        let b = rho * dot(y, dir);
        let a = alpha[i];
        dir.iter_mut().zip(s).for_each(|(d, si)| *d += (a - b) * si);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn solves_rosenbrock() {
        let mut x = [-1.2, 1.0];
        let cfg = LbfgsConfig { max_iters: 500, grad_tol: 1e-8, ..Default::default() };
        let r = minimize(&mut x, &cfg, rosenbrock).unwrap();
        assert_eq!(r.termination, Termination::GradientTolerance);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn quadratic_never_increases() {
        // f(x) = 1/2 x'Ax - b'x with an ill-conditioned diagonal A.
        let a = [1.0, 10.0, 100.0, 1000.0];
        let b = [1.0, -2.0, 3.0, -4.0];
        let mut last = f64::INFINITY;
        let mut x = [5.0; 4];
        let r = minimize(&mut x, &LbfgsConfig::default(), |x, g| {
            let mut v = 0.0;
            for i in 0..4 {
                g[i] = a[i] * x[i] - b[i];
                v += 0.5 * a[i] * x[i] * x[i] - b[i] * x[i];
            }
            v
        })
        .unwrap();
        assert_eq!(r.termination, Termination::GradientTolerance);
        for i in 0..4 {
            assert!((x[i] - b[i] / a[i]).abs() < 1e-6);
        }
        // Replaying the accepted iterates: values are non-increasing.
        let mut x = [5.0; 4];
        let cfg = LbfgsConfig { max_iters: 1, ..Default::default() };
        for _ in 0..20 {
            let r = minimize(&mut x, &cfg, |x, g| {
                let mut v = 0.0;
                for i in 0..4 {
                    g[i] = a[i] * x[i] - b[i];
                    v += 0.5 * a[i] * x[i] * x[i] - b[i] * x[i];
                }
                v
            })
            .unwrap();
            assert!(r.value <= last);
            last = r.value;
        }
    }

    #[test]
    fn starts_at_optimum() {
        let mut x = [0.0, 0.0];
        let r = minimize(&mut x, &LbfgsConfig::default(), |x, g| {
            g[0] = 2.0 * x[0];
            g[1] = 2.0 * x[1];
            x[0] * x[0] + x[1] * x[1]
        })
        .unwrap();
        assert_eq!((r.iterations, r.termination), (0, Termination::GradientTolerance));
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = LbfgsConfig { memory: 0, ..Default::default() };
        assert!(minimize(&mut [0.0], &cfg, |_, _| 0.0).is_err());
    }
}
