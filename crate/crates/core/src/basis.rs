//! Polynomial feature maps used by every linear-in-features nuisance model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Polynomial basis configuration.
///
/// The feature map holds every monomial of total degree `1..=degree` in the
/// `k` covariates (graded order), optionally preceded by an intercept column.
/// With `standardize`, each monomial column is centered and scaled by
/// statistics frozen at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasisSpec {
    pub degree: usize,
    pub intercept: bool,
    pub standardize: bool,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            degree: 1,
            intercept: true,
            standardize: true,
        }
    }
}

impl BasisSpec {
    pub fn intercept_only() -> Self {
        Self {
            degree: 0,
            intercept: true,
            standardize: false,
        }
    }

    /// Output dimension for `k` covariates.
    pub fn dim(&self, k: usize) -> usize {
        monomials(k, self.degree).len() + usize::from(self.intercept)
    }

    /// Freeze standardization statistics on the given covariates.
    pub fn fit<'a, I>(&self, k: usize, xs: I) -> FittedBasis
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let exponents = monomials(k, self.degree);
        let q = exponents.len();
        let mut center = vec![0.0; q];
        let mut scale = vec![1.0; q];
        if self.standardize && q > 0 {
            let mut sum = vec![0.0; q];
            let mut sum_sq = vec![0.0; q];
            let mut count = 0usize;
            for x in xs {
                for (j, e) in exponents.iter().enumerate() {
                    let v = eval_monomial(e, x);
                    sum[j] += v;
                    sum_sq[j] += v * v;
                }
                count += 1;
            }
            if count > 0 {
                let c = count as f64;
                for j in 0..q {
                    let mean = sum[j] / c;
                    let var = (sum_sq[j] / c - mean * mean).max(0.0);
                    center[j] = mean;
                    // Constant columns stay at zero after centering.
                    scale[j] = if var > 1e-24 { var.sqrt() } else { 1.0 };
                }
            }
        }
        FittedBasis {
            spec: *self,
            k,
            exponents,
            center,
            scale,
        }
    }
}

/// A basis with frozen standardization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedBasis {
    spec: BasisSpec,
    k: usize,
    exponents: Vec<Vec<u32>>,
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl FittedBasis {
    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.exponents.len() + usize::from(self.spec.intercept)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn features_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.k);
        let mut j0 = 0;
        if self.spec.intercept {
            out[0] = 1.0;
            j0 = 1;
        }
        for (j, e) in self.exponents.iter().enumerate() {
            out[j0 + j] = (eval_monomial(e, x) - self.center[j]) / self.scale[j];
        }
    }

    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.features_into(x, &mut out);
        out
    }

    /// Linear predictor `phi(x) . coef`.
    pub fn dot(&self, x: &[f64], coef: &[f64]) -> f64 {
        debug_assert_eq!(coef.len(), self.dim());
        let mut acc = 0.0;
        let mut j0 = 0;
        if self.spec.intercept {
            acc += coef[0];
            j0 = 1;
        }
        for (j, e) in self.exponents.iter().enumerate() {
            acc += coef[j0 + j] * (eval_monomial(e, x) - self.center[j]) / self.scale[j];
        }
        acc
    }

    /// Row-major design matrix.
    pub fn design<'a, I>(&self, xs: I) -> Design
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let p = self.dim();
        let mut data = Vec::new();
        let mut buf = vec![0.0; p];
        for x in xs {
            self.features_into(x, &mut buf);
            data.extend_from_slice(&buf);
        }
        Design { p, data }
    }
}

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    p: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn n(&self) -> usize {
        if self.p == 0 {
            0
        } else {
            self.data.len() / self.p
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p.max(1))
    }

    /// `Phi^T W Phi` and `Phi^T W y` for nonnegative row weights.
    pub fn gram(&self, weights: Option<&[f64]>, y: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.p;
        let mut a = DMatrix::<f64>::zeros(p, p);
        let mut b = DVector::<f64>::zeros(p);
        for (i, phi) in self.rows().enumerate() {
            let w = weights.map_or(1.0, |w| w[i]);
            for r in 0..p {
                let wr = w * phi[r];
                b[r] += wr * y[i];
                for c in 0..=r {
                    a[(r, c)] += wr * phi[c];
                }
            }
        }
        symmetrize_lower(&mut a);
        (a, b)
    }
}

/// Copy the lower triangle onto the upper triangle.
pub(crate) fn symmetrize_lower(a: &mut DMatrix<f64>) {
    let p = a.nrows();
    for r in 0..p {
        for c in 0..r {
            a[(c, r)] = a[(r, c)];
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn eval_monomial(exponents: &[u32], x: &[f64]) -> f64 {
    exponents
        .iter()
        .zip(x)
        .filter(|(&e, _)| e > 0)
        .map(|(&e, &v)| v.powi(e as i32))
        .product()
}

/// Exponent vectors of all monomials with total degree in `1..=degree`.
fn monomials(k: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(k: usize, pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == k - 1 {
            cur[pos] = left;
            out.push(cur.clone());
            cur[pos] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[pos] = e;
            rec(k, pos + 1, left - e, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let mut cur = vec![0u32; k];
    for total in 1..=degree as u32 {
        rec(k, 0, total, &mut cur, &mut out);
    }
    out
}
