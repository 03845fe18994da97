//! Forced nuisances for misspecification and oracle studies.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Arm, LabeledRow, OneSampleDataset};
use crate::error::Result;
use crate::estimators::{
    convergence_notes, fit_os_outcome, fit_os_representer, fit_ts_propensity, fit_ts_ratio,
    ts_notes, OsNuisance, OsNuisanceFitter, TsNuisance, TsNuisanceFitter,
};
use crate::nuisance::fixed::{ConstantE, ConstantG, ZeroOutcome};
use crate::nuisance::{
    fit_outcome_model, NuisanceConfig, OutcomeFn, PropensityFn, RatioFn, Representer,
};
use crate::oracle::DgpSpec;

/// Which fitted nuisance, if any, is replaced after fitting.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hook {
    #[default]
    None,
    /// `mu == 0`.
    ZeroMu,
    /// `g(d | x) == c` (one-sample).
    ConstantG(f64),
    /// `e(1 | x) == c` (two-sample).
    ConstantE(f64),
    /// True `g` (one-sample) or true `e` and `p/q` (two-sample).
    TrueWeights,
    /// Every nuisance replaced by its true value.
    Oracle,
}

/// `mu0(d, x)` of a spec.
#[derive(Debug, Clone)]
pub struct TrueOutcome(pub Arc<DgpSpec>);

impl OutcomeFn for TrueOutcome {
    fn predict(&self, arm: Arm, x: &[f64]) -> f64 {
        self.0.mu(arm, x)
    }
}

/// `+-1 / g0(d | x)` of a one-sample spec.
#[derive(Debug, Clone)]
pub struct TrueRepresenter(pub Arc<DgpSpec>);

impl Representer for TrueRepresenter {
    fn alpha(&self, arm: Arm, x: &[f64]) -> f64 {
        arm.sign() / self.0.g(arm, x).expect("one-sample spec")
    }
}

#[derive(Debug, Clone)]
pub struct TruePropensity(pub Arc<DgpSpec>);

impl PropensityFn for TruePropensity {
    fn e1(&self, x: &[f64]) -> f64 {
        self.0.e1(x)
    }
}

/// `p0(x) / q0(x)` of a two-sample spec.
#[derive(Debug, Clone)]
pub struct TrueRatio(pub Arc<DgpSpec>);

impl RatioFn for TrueRatio {
    fn ratio(&self, x: &[f64]) -> f64 {
        self.0.ratio_pq(x).expect("two-sample spec")
    }
}

/// Fits only the nuisances the hook and the score need, then substitutes.
pub struct HookedOsFitter {
    pub cfg: NuisanceConfig,
    pub hook: Hook,
    pub dgp: Arc<DgpSpec>,
    pub need_outcome: bool,
    pub need_weights: bool,
}

impl OsNuisanceFitter for HookedOsFitter {
    fn fit(&self, train: &OneSampleDataset) -> Result<OsNuisance> {
        let outcome: Arc<dyn OutcomeFn> = match self.hook {
            Hook::ZeroMu => Arc::new(ZeroOutcome),
            Hook::Oracle => Arc::new(TrueOutcome(self.dgp.clone())),
            _ if !self.need_outcome => Arc::new(ZeroOutcome),
            _ => fit_os_outcome(train, &self.cfg)?,
        };
        let (representer, converged): (Arc<dyn Representer>, bool) = match self.hook {
            Hook::ConstantG(c) => (Arc::new(ConstantG(c)), true),
            Hook::TrueWeights | Hook::Oracle => (Arc::new(TrueRepresenter(self.dgp.clone())), true),
            _ if !self.need_weights => (Arc::new(ConstantG(1.0)), true),
            _ => fit_os_representer(train, &self.cfg)?,
        };
        Ok(OsNuisance {
            outcome,
            representer,
            converged,
            notes: convergence_notes(converged),
        })
    }
}

pub struct HookedTsFitter {
    pub cfg: NuisanceConfig,
    pub hook: Hook,
    pub dgp: Arc<DgpSpec>,
}

impl TsNuisanceFitter for HookedTsFitter {
    fn fit(&self, labeled: &[LabeledRow], unlabeled: &[Vec<f64>]) -> Result<TsNuisance> {
        let outcome: Arc<dyn OutcomeFn> = match self.hook {
            Hook::ZeroMu => Arc::new(ZeroOutcome),
            Hook::Oracle => Arc::new(TrueOutcome(self.dgp.clone())),
            _ => Arc::new(fit_outcome_model(labeled, &self.cfg)?),
        };
        let (propensity, e_ok): (Arc<dyn PropensityFn>, bool) = match self.hook {
            Hook::ConstantE(c) => (Arc::new(ConstantE(c)), true),
            Hook::TrueWeights | Hook::Oracle => (Arc::new(TruePropensity(self.dgp.clone())), true),
            _ => fit_ts_propensity(labeled, &self.cfg)?,
        };
        let (ratio, r_ok): (Arc<dyn RatioFn>, bool) = match self.hook {
            Hook::TrueWeights | Hook::Oracle => (Arc::new(TrueRatio(self.dgp.clone())), true),
            _ => fit_ts_ratio(labeled, unlabeled, &self.cfg),
        };
        Ok(TsNuisance {
            outcome,
            propensity,
            ratio,
            converged: e_ok && r_ok,
            notes: ts_notes(e_ok, r_ok),
        })
    }
}
