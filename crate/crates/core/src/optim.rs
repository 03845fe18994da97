//! Full-batch descent with backtracking line search.
//!
//! Search directions are Newton steps when the (slightly jittered) Hessian
//! factors, falling back to steepest descent otherwise. Step lengths are
//! halved until the Armijo condition holds. Iteration stops when the gradient
//! norm drops to `tol` or after `max_iter` iterations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-8,
        }
    }
}

/// A smooth objective to minimize.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Objective value; `f64::INFINITY` marks points outside the domain.
    fn value(&self, theta: &DVector<f64>) -> f64;

    /// Value, gradient and Hessian.
    fn eval(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>);
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub theta: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const JITTER: f64 = 1e-10;
const NOISE: f64 = 64.0 * f64::EPSILON;

pub fn minimize<O: Objective + ?Sized>(obj: &O, start: DVector<f64>, cfg: &OptConfig) -> OptResult {
    let p = obj.dim();
    let mut theta = start;
    let (mut f, mut grad, mut hess) = obj.eval(&theta);
    let mut iterations = 0;
    loop {
        let grad_norm = grad.norm();
        if grad_norm <= cfg.tol || !f.is_finite() {
            return OptResult {
                theta,
                value: f,
                grad_norm,
                iterations,
                converged: grad_norm <= cfg.tol && f.is_finite(),
            };
        }
        if iterations >= cfg.max_iter {
            return OptResult {
                theta,
                value: f,
                grad_norm,
                iterations,
                converged: false,
            };
        }
        iterations += 1;

        let scale = hess.diagonal().amax().max(1.0);
        let damped = &hess + DMatrix::<f64>::identity(p, p) * (JITTER * scale);
        let mut dir = match damped.cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -grad.clone(),
        };
        let mut slope = grad.dot(&dir);
        if !(slope < 0.0) || !slope.is_finite() {
            dir = -grad.clone();
            slope = -grad_norm * grad_norm;
        }

        let mut t = 1.0;
        let mut moved = false;
        while t >= MIN_STEP {
            let cand = &theta + &dir * t;
            if cand == theta {
                break;
            }
            let fc = obj.value(&cand);
            let mut next = None;
            if fc.is_finite() && fc < f + ARMIJO * t * slope {
                next = Some(obj.eval(&cand));
            } else if fc.is_finite() && (fc - f).abs() <= NOISE * f.abs().max(1.0) {
                // Progress below the resolution of the objective: judge the
                // step by the gradient instead.
                let trial = obj.eval(&cand);
                if trial.1.norm() < grad_norm {
                    next = Some(trial);
                }
            }
            if let Some(evaluated) = next {
                theta = cand;
                (f, grad, hess) = evaluated;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // No decrease is representable at this precision.
            return OptResult {
                theta,
                value: f,
                grad_norm,
                iterations,
                converged: false,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, t: &DVector<f64>) -> f64 {
            (1.0 - t[0]).powi(2) + 100.0 * (t[1] - t[0] * t[0]).powi(2)
        }
        fn eval(&self, t: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
            let (x, y) = (t[0], t[1]);
            let g = DVector::from_vec(vec![
                -2.0 * (1.0 - x) - 400.0 * x * (y - x * x),
                200.0 * (y - x * x),
            ]);
            let h = DMatrix::from_row_slice(
                2,
                2,
                &[
                    2.0 - 400.0 * (y - 3.0 * x * x),
                    -400.0 * x,
                    -400.0 * x,
                    200.0,
                ],
            );
            (self.value(t), g, h)
        }
    }

    #[test]
    fn rosenbrock_converges() {
        let r = minimize(
            &Rosenbrock,
            DVector::from_vec(vec![-1.2, 1.0]),
            &OptConfig::default(),
        );
        assert!(r.converged, "{r:?}");
        assert!((r.theta[0] - 1.0).abs() < 1e-8);
        assert!((r.theta[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn max_iter_flags_non_convergence() {
        let r = minimize(
            &Rosenbrock,
            DVector::from_vec(vec![-1.2, 1.0]),
            &OptConfig {
                max_iter: 2,
                tol: 1e-8,
            },
        );
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
    }
}
