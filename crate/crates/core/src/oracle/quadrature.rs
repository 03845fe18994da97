//! Gauss-Hermite product rules for Gaussian expectations.

use std::sync::OnceLock;

pub const NODES: usize = 64;

/// Nodes and weights of the `n`-point rule for `int f(t) exp(-t^2) dt`,
/// found by Newton iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(NODES))
}

/// `E[f(X)]` for `X ~ N(mean, diag(var))` by the 64-point product rule.
pub(crate) fn expect_normal(mean: &[f64], var: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    let (t, w) = rule();
    let k = mean.len();
    let norm = std::f64::consts::PI.powf(-(k as f64) / 2.0);
    let scale: Vec<f64> = var.iter().map(|v| (2.0 * v).sqrt()).collect();
    let mut idx = vec![0usize; k];
    let mut x = vec![0.0; k];
    let mut total = 0.0;
    loop {
        let mut weight = norm;
        for j in 0..k {
            x[j] = mean[j] + scale[j] * t[idx[j]];
            weight *= w[idx[j]];
        }
        if weight > 0.0 {
            total += weight * f(&x);
        }
        let mut j = 0;
        loop {
            if j == k {
                return total;
            }
            idx[j] += 1;
            if idx[j] < NODES {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(NODES);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let m = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((m(0) - sqrt_pi).abs() < 1e-13);
        assert!((m(2) - sqrt_pi / 2.0).abs() < 1e-13);
        assert!((m(4) - 3.0 * sqrt_pi / 4.0).abs() < 1e-12);
        assert!(m(3).abs() < 1e-12);
    }

    #[test]
    fn gaussian_expectations() {
        let e = expect_normal(&[1.0, -2.0], &[4.0, 0.25], |x| x[0] * x[0] + x[1]);
        assert!((e - (4.0 + 1.0 - 2.0)).abs() < 1e-12);
        let mgf = expect_normal(&[0.0], &[1.0], |x| x[0].exp());
        assert!((mgf - 0.5f64.exp()).abs() < 1e-13);
    }
}
