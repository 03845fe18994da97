//! Multinomial logistic regression (reference class last), fitted by
//! minimizing the mean negative log-likelihood.

use nalgebra::{DMatrix, DVector};

use crate::basis::{dot, symmetrize_lower, Design};
use crate::optim::{minimize, Objective, OptConfig, OptResult};

/// `classes` categories; the last is the reference with logit fixed at zero.
pub(crate) struct Multinomial<'a> {
    pub design: &'a Design,
    pub labels: &'a [usize],
    pub classes: usize,
}

impl Multinomial<'_> {
    fn free(&self) -> usize {
        self.classes - 1
    }

    fn probs(&self, phi: &[f64], theta: &DVector<f64>, out: &mut [f64]) -> f64 {
        class_probs(phi, theta.as_slice(), out)
    }
}

/// Probabilities of the non-reference classes for one feature row, written to
/// `out` (length = classes - 1); returns the log-normalizer.
pub(crate) fn class_probs(phi: &[f64], theta: &[f64], out: &mut [f64]) -> f64 {
    let p = phi.len();
    let k = out.len();
    let mut max = 0.0f64;
    for c in 0..k {
        out[c] = dot(phi, &theta[c * p..(c + 1) * p]);
        max = max.max(out[c]);
    }
    let mut z = (-max).exp();
    for v in out.iter_mut() {
        *v = (*v - max).exp();
        z += *v;
    }
    for v in out.iter_mut() {
        *v /= z;
    }
    max + z.ln()
}

impl Objective for Multinomial<'_> {
    fn dim(&self) -> usize {
        self.free() * self.design.p()
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        let p = self.design.p();
        let mut probs = vec![0.0; self.free()];
        let mut nll = 0.0;
        for (phi, &c) in self.design.rows().zip(self.labels) {
            let lse = self.probs(phi, theta, &mut probs);
            let eta = if c < self.free() {
                dot(phi, &theta.as_slice()[c * p..(c + 1) * p])
            } else {
                0.0
            };
            nll += lse - eta;
        }
        nll / self.labels.len() as f64
    }

    fn eval(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let p = self.design.p();
        let k = self.free();
        let dim = k * p;
        let n = self.labels.len() as f64;
        let mut probs = vec![0.0; k];
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        let mut nll = 0.0;
        for (phi, &c) in self.design.rows().zip(self.labels) {
            let lse = self.probs(phi, theta, &mut probs);
            let eta = if c < k {
                dot(phi, &theta.as_slice()[c * p..(c + 1) * p])
            } else {
                0.0
            };
            nll += lse - eta;
            for a in 0..k {
                let resid = probs[a] - f64::from(u8::from(a == c));
                for r in 0..p {
                    grad[a * p + r] += resid * phi[r];
                }
                for b in 0..=a {
                    let w = if a == b {
                        probs[a] * (1.0 - probs[a])
                    } else {
                        -probs[a] * probs[b]
                    };
                    for r in 0..p {
                        let wr = w * phi[r];
                        for s in 0..p {
                            let (row, col) = (a * p + r, b * p + s);
                            if col <= row {
                                hess[(row, col)] += wr * phi[s];
                            }
                        }
                    }
                }
            }
        }
        symmetrize_lower(&mut hess);
        (nll / n, grad / n, hess / n)
    }
}

pub(crate) fn fit_multinomial(
    design: &Design,
    labels: &[usize],
    classes: usize,
    opt: &OptConfig,
) -> OptResult {
    let obj = Multinomial {
        design,
        labels,
        classes,
    };
    let start = DVector::zeros(obj.dim());
    minimize(&obj, start, opt)
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;

    #[test]
    fn gradient_matches_finite_differences() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin()]).collect();
        let labels: Vec<usize> = (0..40).map(|i| (i * 7 + i / 3) % 3).collect();
        let b = BasisSpec {
            degree: 2,
            ..Default::default()
        }
        .fit(1, xs.iter().map(|v| v.as_slice()));
        let design = b.design(xs.iter().map(|v| v.as_slice()));
        let obj = Multinomial {
            design: &design,
            labels: &labels,
            classes: 3,
        };
        let theta = DVector::from_vec(vec![0.3, -0.2, 0.5, -0.1, 0.4, 0.2]);
        let (_, g, h) = obj.eval(&theta);
        let step = 1e-6;
        for j in 0..6 {
            let mut tp = theta.clone();
            tp[j] += step;
            let mut tm = theta.clone();
            tm[j] -= step;
            let fd = (obj.value(&tp) - obj.value(&tm)) / (2.0 * step);
            assert!((fd - g[j]).abs() < 1e-7, "grad {j}: {fd} vs {}", g[j]);
            let (_, gp, _) = obj.eval(&tp);
            let (_, gm, _) = obj.eval(&tm);
            for i in 0..6 {
                let fdh = (gp[i] - gm[i]) / (2.0 * step);
                assert!((fdh - h[(i, j)]).abs() < 1e-6);
            }
        }
    }
}
