//! Nuisance models: outcome regressions, observation/treatment probabilities,
//! propensity scores, density ratios and Riesz representers, plus the TMLE
//! fluctuation and the iterative debiasing loop built on top of them.

mod emodel;
mod gmodel;
mod logistic;
mod outcome;
mod ratio;
mod riesz;
mod tmle;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::data::{Arm, OneSampleRow};
use crate::optim::OptConfig;

pub use emodel::{fit_e_model, EModel};
pub(crate) use gmodel::fit_gmodel;
pub use gmodel::{fit_gmodel_mle, GModel};
pub use outcome::{
    default_clip_c, fit_outcome, fit_outcome_model, ArmRegression, Fluctuation, OutcomeModel,
};
pub(crate) use ratio::v_beta;
pub use ratio::{assemble_v_beta, fit_density_ratio, DensityRatioModel, VBeta};
pub use riesz::{
    fit_riesz, fit_weighted_riesz, fit_with as fit_riesz_with_weights, riesz_loss,
    riesz_loss_gradient, weighted_riesz_loss, BregmanGenerator, RieszModel, RieszWeights,
};
pub use tmle::{
    ddml_iterate, neyman_plug_in, score_residual, tmle_fluctuate, DdmlResult, DdmlStep,
};

/// Conditional outcome means `mu(d, x)`.
pub trait OutcomeFn: Send + Sync {
    fn predict(&self, arm: Arm, x: &[f64]) -> f64;

    /// `mu(1, x) - mu(0, x)`.
    fn contrast(&self, x: &[f64]) -> f64 {
        self.predict(Arm::Treated, x) - self.predict(Arm::Control, x)
    }
}

/// Riesz representer evaluated on an observed unit, `alpha(1, d, x)`.
/// Unobserved units always carry weight zero.
pub trait Representer: Send + Sync {
    fn alpha(&self, arm: Arm, x: &[f64]) -> f64;

    fn alpha_row(&self, row: &OneSampleRow) -> f64 {
        match row.label() {
            Some((d, _)) => self.alpha(d, &row.x),
            None => 0.0,
        }
    }
}

/// Treatment propensity `e(1 | x)` in the labeled population.
pub trait PropensityFn: Send + Sync {
    fn e1(&self, x: &[f64]) -> f64;

    fn e(&self, arm: Arm, x: &[f64]) -> f64 {
        match arm {
            Arm::Treated => self.e1(x),
            Arm::Control => 1.0 - self.e1(x),
        }
    }
}

/// Density ratio `p(x) / q(x)` between labeled and unlabeled covariates.
pub trait RatioFn: Send + Sync {
    fn ratio(&self, x: &[f64]) -> f64;
}

/// How the inverse-probability weights of the one-sample score are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RieszMode {
    /// Multinomial logistic MLE for `g`, weights `+-1/g`.
    MleG,
    /// Least-squares (LSIF) generalized Riesz regression.
    LsRiesz,
    /// KL (UKL) generalized Riesz regression.
    KlRiesz,
}

impl std::str::FromStr for RieszMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mle-g" => Ok(RieszMode::MleG),
            "ls-riesz" => Ok(RieszMode::LsRiesz),
            "kl-riesz" => Ok(RieszMode::KlRiesz),
            other => Err(format!(
                "unknown riesz mode {other:?} (expected mle-g, ls-riesz or kl-riesz)"
            )),
        }
    }
}

/// Settings shared by every nuisance fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NuisanceConfig {
    pub basis: BasisSpec,
    pub ridge_lambda: f64,
    pub clip_eps: f64,
    /// Outcome prediction bound; `None` uses `100 * max |y|` of the training data.
    pub clip_c: Option<f64>,
    pub ratio_clip: (f64, f64),
    pub riesz_mode: RieszMode,
    pub opt: OptConfig,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        Self {
            basis: BasisSpec::default(),
            ridge_lambda: 1e-6,
            clip_eps: 0.01,
            clip_c: None,
            ratio_clip: (0.01, 100.0),
            riesz_mode: RieszMode::MleG,
            opt: OptConfig::default(),
        }
    }
}

impl NuisanceConfig {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error::InvalidConfig;
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(InvalidConfig(
                "ridge_lambda must be a finite value >= 0".into(),
            ));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 0.5) {
            return Err(InvalidConfig("clip_eps must lie in (0, 1/2)".into()));
        }
        if let Some(c) = self.clip_c {
            if !(c > 0.0) {
                return Err(InvalidConfig("clip_c must be positive".into()));
            }
        }
        let (lo, hi) = self.ratio_clip;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(InvalidConfig(
                "ratio_clip must satisfy 0 < lo <= hi < inf".into(),
            ));
        }
        if self.opt.max_iter == 0 || !(self.opt.tol > 0.0) {
            return Err(InvalidConfig(
                "optimizer needs max_iter >= 1 and tol > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Functions with a closed form, used as forced nuisances in studies and tests.
pub mod fixed {
    use super::*;

    /// `mu == 0`.
    #[derive(Debug, Clone, Copy, Default)]
    pub struct ZeroOutcome;

    impl OutcomeFn for ZeroOutcome {
        fn predict(&self, _arm: Arm, _x: &[f64]) -> f64 {
            0.0
        }
    }

    /// `g(d | x) == c` for both arms, weights `+-1/c`.
    #[derive(Debug, Clone, Copy)]
    pub struct ConstantG(pub f64);

    impl Representer for ConstantG {
        fn alpha(&self, arm: Arm, _x: &[f64]) -> f64 {
            arm.sign() / self.0
        }
    }

    /// `e(1 | x) == c`.
    #[derive(Debug, Clone, Copy)]
    pub struct ConstantE(pub f64);

    impl PropensityFn for ConstantE {
        fn e1(&self, _x: &[f64]) -> f64 {
            self.0
        }
    }

    /// `p / q == 1`.
    #[derive(Debug, Clone, Copy)]
    pub struct UnitRatio;

    impl RatioFn for UnitRatio {
        fn ratio(&self, _x: &[f64]) -> f64 {
            1.0
        }
    }
}
