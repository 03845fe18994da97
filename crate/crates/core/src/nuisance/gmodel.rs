//! Joint observation/treatment probabilities `g(d | x) = P(O = 1, D = d | x)`
//! from a multinomial logistic model over the classes
//! `(O=1, D=1)`, `(O=1, D=0)` and `(O=0)`.

use super::logistic::{class_probs, fit_multinomial};
use super::{NuisanceConfig, Representer};
use crate::basis::{BasisSpec, FittedBasis};
use crate::data::{Arm, OneSampleDataset};
use crate::error::{Error, Result};
use crate::optim::OptConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct GModel {
    basis: FittedBasis,
    /// Stacked coefficients of the non-reference classes.
    weights: Vec<f64>,
    /// False when the training data had no unobserved rows; the `O = 0`
    /// class then has probability zero.
    has_unobserved: bool,
    clip_eps: f64,
    converged: bool,
    iterations: usize,
}

impl GModel {
    pub fn clip_eps(&self) -> f64 {
        self.clip_eps
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unclipped probabilities of `(1,1)`, `(1,0)` and `(0,.)`.
    pub fn raw_probs(&self, x: &[f64]) -> [f64; 3] {
        let phi = self.basis.features(x);
        if self.has_unobserved {
            let mut out = [0.0; 2];
            class_probs(&phi, &self.weights, &mut out);
            [out[0], out[1], 1.0 - out[0] - out[1]]
        } else {
            let mut out = [0.0; 1];
            class_probs(&phi, &self.weights, &mut out);
            [out[0], 1.0 - out[0], 0.0]
        }
    }

    /// `g(d | x)` clamped to `[clip_eps, 1 - clip_eps]`.
    pub fn g(&self, arm: Arm, x: &[f64]) -> f64 {
        let raw = self.raw_probs(x);
        let v = match arm {
            Arm::Treated => raw[0],
            Arm::Control => raw[1],
        };
        v.clamp(self.clip_eps, 1.0 - self.clip_eps)
    }
}

impl Representer for GModel {
    fn alpha(&self, arm: Arm, x: &[f64]) -> f64 {
        arm.sign() / self.g(arm, x)
    }
}

/// Multinomial MLE of the observation/treatment class given `phi(x)`.
///
/// Both labeled classes must be present. When no row is unobserved the MLE of
/// `P(O = 0 | x)` is identically zero, and the model reduces to a binary
/// treatment model on the labeled rows.
pub fn fit_gmodel_mle(
    data: &OneSampleDataset,
    basis: &BasisSpec,
    clip_eps: f64,
    opt: &OptConfig,
) -> Result<GModel> {
    let labels: Vec<usize> = data
        .rows()
        .iter()
        .map(|r| match r.label() {
            Some((Arm::Treated, _)) => 0,
            Some((Arm::Control, _)) => 1,
            None => 2,
        })
        .collect();
    let mut counts = [0usize; 3];
    for &c in &labels {
        counts[c] += 1;
    }
    for (c, name) in [(0, "(O=1, D=1)"), (1, "(O=1, D=0)")] {
        if counts[c] == 0 {
            return Err(Error::ClassAbsent(name.into()));
        }
    }
    let has_unobserved = counts[2] > 0;
    let fitted = basis.fit(data.k(), data.rows().iter().map(|r| r.x.as_slice()));
    let design = fitted.design(data.rows().iter().map(|r| r.x.as_slice()));
    let classes = if has_unobserved { 3 } else { 2 };
    let res = fit_multinomial(&design, &labels, classes, opt);
    Ok(GModel {
        basis: fitted,
        weights: res.theta.as_slice().to_vec(),
        has_unobserved,
        clip_eps,
        converged: res.converged,
        iterations: res.iterations,
    })
}

pub(crate) fn fit_gmodel(data: &OneSampleDataset, cfg: &NuisanceConfig) -> Result<GModel> {
    fit_gmodel_mle(data, &cfg.basis, cfg.clip_eps, &cfg.opt)
}
