//! Density ratio `p(x) / q(x)` from a labeled-vs-unlabeled classifier, and the
//! two-sample weighting function `v_beta(d, x)`.

use super::logistic::fit_multinomial;
use super::{PropensityFn, RatioFn};
use crate::basis::{dot, BasisSpec, FittedBasis};
use crate::data::Arm;
use crate::optim::OptConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRatioModel {
    basis: FittedBasis,
    weights: Vec<f64>,
    /// `l / m`.
    prior_correction: f64,
    clip: (f64, f64),
    converged: bool,
}

impl DensityRatioModel {
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn prior_correction(&self) -> f64 {
        self.prior_correction
    }

    pub fn clip(&self) -> (f64, f64) {
        self.clip
    }

    /// Unclipped `c(x) / (1 - c(x)) * l / m`.
    pub fn raw_ratio(&self, x: &[f64]) -> f64 {
        dot(&self.basis.features(x), &self.weights).exp() * self.prior_correction
    }
}

impl RatioFn for DensityRatioModel {
    fn ratio(&self, x: &[f64]) -> f64 {
        self.raw_ratio(x).clamp(self.clip.0, self.clip.1)
    }
}

/// Fit `P(source = labeled | x)` on the pooled covariates by logistic MLE.
/// Both samples must be nonempty.
pub fn fit_density_ratio(
    labeled_x: &[&[f64]],
    unlabeled_z: &[&[f64]],
    basis: &BasisSpec,
    clip: (f64, f64),
    opt: &OptConfig,
) -> DensityRatioModel {
    let (m, l) = (labeled_x.len(), unlabeled_z.len());
    assert!(m > 0 && l > 0, "density ratio needs both samples");
    let k = labeled_x[0].len();
    let pooled = || labeled_x.iter().chain(unlabeled_z).copied();
    let fitted = basis.fit(k, pooled());
    let design = fitted.design(pooled());
    let labels: Vec<usize> = (0..m + l).map(|i| usize::from(i >= m)).collect();
    let res = fit_multinomial(&design, &labels, 2, opt);
    DensityRatioModel {
        basis: fitted,
        weights: res.theta.as_slice().to_vec(),
        prior_correction: l as f64 / m as f64,
        clip,
        converged: res.converged,
    }
}

/// `v_beta(d, x) = e(d | x) / (beta + (1 - beta) / r(x))`.
#[derive(Clone, Copy)]
pub struct VBeta<'a> {
    pub e: &'a dyn PropensityFn,
    pub r: &'a dyn RatioFn,
    pub beta: f64,
}

impl VBeta<'_> {
    pub fn v(&self, arm: Arm, x: &[f64]) -> f64 {
        v_beta(self.e.e(arm, x), self.r.ratio(x), self.beta)
    }
}

pub fn assemble_v_beta<'a>(e: &'a dyn PropensityFn, r: &'a dyn RatioFn, beta: f64) -> VBeta<'a> {
    VBeta { e, r, beta }
}

pub(crate) fn v_beta(e_d: f64, r: f64, beta: f64) -> f64 {
    e_d / (beta + (1.0 - beta) / r)
}

#[cfg(test)]
mod tests {
    use super::super::fixed::{ConstantE, UnitRatio};
    use super::*;

    #[test]
    fn balanced_identical_samples_give_unit_ratio() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let r = fit_density_ratio(
            &refs,
            &refs,
            &BasisSpec::default(),
            (0.01, 100.0),
            &OptConfig::default(),
        );
        for x in &xs {
            assert!((r.ratio(x) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ratio_is_clipped() {
        let a: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 10.0]).collect();
        let b: Vec<Vec<f64>> = (0..50).map(|i| vec![3.0 + i as f64 / 10.0]).collect();
        let ra: Vec<&[f64]> = a.iter().map(|v| v.as_slice()).collect();
        let rb: Vec<&[f64]> = b.iter().map(|v| v.as_slice()).collect();
        let opt = OptConfig {
            max_iter: 50,
            tol: 1e-8,
        };
        let r = fit_density_ratio(&ra, &rb, &BasisSpec::default(), (0.5, 2.0), &opt);
        assert_eq!(r.ratio(&[-10.0]), 2.0);
        assert_eq!(r.ratio(&[20.0]), 0.5);
    }

    #[test]
    fn v_beta_special_cases() {
        let e = ConstantE(0.3);
        let unit = assemble_v_beta(&e, &UnitRatio, 0.4);
        assert!((unit.v(Arm::Treated, &[0.0]) - 0.3).abs() < 1e-15);
        assert!((v_beta(0.3, 2.5, 1.0) - 0.3).abs() < 1e-15);
        assert!((v_beta(0.3, 2.5, 0.0) - 0.75).abs() < 1e-15);
    }
}
