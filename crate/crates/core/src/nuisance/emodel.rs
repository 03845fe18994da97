//! Binary logistic propensity model `e(1 | x)` on labeled rows.

use super::logistic::{fit_multinomial, sigmoid};
use super::PropensityFn;
use crate::basis::{dot, BasisSpec, FittedBasis};
use crate::data::{Arm, LabeledRow};
use crate::error::{Error, Result};
use crate::optim::OptConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct EModel {
    basis: FittedBasis,
    weights: Vec<f64>,
    clip_eps: f64,
    converged: bool,
}

impl EModel {
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn raw_e1(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.basis.features(x), &self.weights))
    }
}

impl PropensityFn for EModel {
    fn e1(&self, x: &[f64]) -> f64 {
        self.raw_e1(x).clamp(self.clip_eps, 1.0 - self.clip_eps)
    }
}

pub fn fit_e_model(
    labeled: &[LabeledRow],
    basis: &BasisSpec,
    clip_eps: f64,
    opt: &OptConfig,
) -> Result<EModel> {
    let labels: Vec<usize> = labeled
        .iter()
        .map(|r| match r.d {
            Arm::Treated => 0,
            Arm::Control => 1,
        })
        .collect();
    for (c, name) in [(0, "treated"), (1, "control")] {
        if !labels.contains(&c) {
            return Err(Error::ClassAbsent(format!("no {name} rows")));
        }
    }
    let k = labeled[0].x.len();
    let fitted = basis.fit(k, labeled.iter().map(|r| r.x.as_slice()));
    let design = fitted.design(labeled.iter().map(|r| r.x.as_slice()));
    let res = fit_multinomial(&design, &labels, 2, opt);
    Ok(EModel {
        basis: fitted,
        weights: res.theta.as_slice().to_vec(),
        clip_eps,
        converged: res.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(treated: usize, control: usize) -> Vec<LabeledRow> {
        let mut v = Vec::new();
        for i in 0..treated + control {
            v.push(LabeledRow {
                x: vec![(i % 5) as f64],
                d: if i < treated {
                    Arm::Treated
                } else {
                    Arm::Control
                },
                y: 0.0,
            });
        }
        v
    }

    #[test]
    fn intercept_only_matches_treated_fraction() {
        let e = fit_e_model(
            &rows(30, 70),
            &BasisSpec::intercept_only(),
            0.01,
            &OptConfig::default(),
        )
        .unwrap();
        assert!((e.e1(&[3.0]) - 0.3).abs() < 1e-7);
        assert!((e.e(Arm::Control, &[3.0]) - 0.7).abs() < 1e-7);
    }

    #[test]
    fn all_treated_is_rejected() {
        assert!(matches!(
            fit_e_model(
                &rows(10, 0),
                &BasisSpec::default(),
                0.01,
                &OptConfig::default()
            ),
            Err(Error::ClassAbsent(_))
        ));
    }
}
