//! Ridge outcome regressions `mu(d, x)`, one per arm.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{NuisanceConfig, OutcomeFn, Representer};
use crate::basis::{BasisSpec, FittedBasis};
use crate::data::{Arm, LabeledRow};
use crate::error::{Error, Result};

/// Ridge fit `argmin sum (y - phi(x).b)^2 + lambda |b|^2` on one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmRegression {
    arm: Arm,
    basis: FittedBasis,
    coef: Vec<f64>,
    lambda: f64,
}

impl ArmRegression {
    pub fn arm(&self) -> Arm {
        self.arm
    }

    pub fn basis(&self) -> &FittedBasis {
        &self.basis
    }

    pub fn coef(&self) -> &[f64] {
        &self.coef
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Unclipped linear prediction.
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.basis.dot(x, &self.coef)
    }
}

/// Fit the ridge regression for `arm` on the rows with `d == arm`.
pub fn fit_outcome(
    rows: &[LabeledRow],
    arm: Arm,
    basis: &BasisSpec,
    lambda: f64,
) -> Result<ArmRegression> {
    let xs: Vec<&[f64]> = rows
        .iter()
        .filter(|r| r.d == arm)
        .map(|r| r.x.as_slice())
        .collect();
    let ys: Vec<f64> = rows.iter().filter(|r| r.d == arm).map(|r| r.y).collect();
    let k = match rows.first() {
        Some(r) => r.x.len(),
        None => {
            return Err(Error::InsufficientArmData {
                arm: arm.indicator(),
                available: 0,
                required: 1,
            })
        }
    };
    fit_arm(arm, k, &xs, &ys, basis, lambda)
}

pub(crate) fn fit_arm(
    arm: Arm,
    k: usize,
    xs: &[&[f64]],
    ys: &[f64],
    basis: &BasisSpec,
    lambda: f64,
) -> Result<ArmRegression> {
    let p = basis.dim(k);
    if xs.len() < p.max(1) {
        return Err(Error::InsufficientArmData {
            arm: arm.indicator(),
            available: xs.len(),
            required: p.max(1),
        });
    }
    let fitted = basis.fit(k, xs.iter().copied());
    let design = fitted.design(xs.iter().copied());
    let (mut a, b) = design.gram(None, ys);
    a += DMatrix::<f64>::identity(p, p) * lambda;
    let chol = a.cholesky().ok_or(Error::SingularSystem)?;
    let coef = chol.solve(&b);
    if coef.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(ArmRegression {
        arm,
        basis: fitted,
        coef: coef.as_slice().to_vec(),
        lambda,
    })
}

/// One TMLE update `mu <- mu + epsilon * alpha(1, d, x)`.
#[derive(Clone)]
pub struct Fluctuation {
    pub epsilon: f64,
    pub representer: Arc<dyn Representer>,
}

impl fmt::Debug for Fluctuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fluctuation")
            .field("epsilon", &self.epsilon)
            .finish_non_exhaustive()
    }
}

/// Both arm regressions plus any fluctuation steps, with predictions clipped
/// to `[-clip_c, clip_c]`.
#[derive(Debug, Clone)]
pub struct OutcomeModel {
    treated: ArmRegression,
    control: ArmRegression,
    clip_c: f64,
    fluctuations: Vec<Fluctuation>,
}

impl OutcomeModel {
    pub fn new(treated: ArmRegression, control: ArmRegression, clip_c: f64) -> Self {
        debug_assert_eq!(treated.arm, Arm::Treated);
        debug_assert_eq!(control.arm, Arm::Control);
        Self {
            treated,
            control,
            clip_c,
            fluctuations: Vec::new(),
        }
    }

    pub fn arm(&self, arm: Arm) -> &ArmRegression {
        match arm {
            Arm::Treated => &self.treated,
            Arm::Control => &self.control,
        }
    }

    pub fn clip_c(&self) -> f64 {
        self.clip_c
    }

    pub fn fluctuations(&self) -> &[Fluctuation] {
        &self.fluctuations
    }

    pub fn with_fluctuation(&self, epsilon: f64, representer: Arc<dyn Representer>) -> Self {
        let mut next = self.clone();
        next.fluctuations.push(Fluctuation {
            epsilon,
            representer,
        });
        next
    }

    /// Prediction before clipping.
    pub fn unclipped(&self, arm: Arm, x: &[f64]) -> f64 {
        let base = self.arm(arm).raw(x);
        self.fluctuations
            .iter()
            .fold(base, |acc, f| acc + f.epsilon * f.representer.alpha(arm, x))
    }
}

impl OutcomeFn for OutcomeModel {
    fn predict(&self, arm: Arm, x: &[f64]) -> f64 {
        self.unclipped(arm, x).clamp(-self.clip_c, self.clip_c)
    }
}

/// `100 * max |y|`, or 1 when every outcome is zero.
pub fn default_clip_c(rows: &[LabeledRow]) -> f64 {
    let m = rows.iter().map(|r| r.y.abs()).fold(0.0, f64::max);
    if m > 0.0 {
        100.0 * m
    } else {
        1.0
    }
}

/// Fit both arms with the shared configuration.
pub fn fit_outcome_model(rows: &[LabeledRow], cfg: &NuisanceConfig) -> Result<OutcomeModel> {
    let treated = fit_outcome(rows, Arm::Treated, &cfg.basis, cfg.ridge_lambda)?;
    let control = fit_outcome(rows, Arm::Control, &cfg.basis, cfg.ridge_lambda)?;
    let clip = cfg.clip_c.unwrap_or_else(|| default_clip_c(rows));
    Ok(OutcomeModel::new(treated, control, clip))
}
