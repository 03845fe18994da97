//! Two-sample (case-control) estimator.

use std::sync::Arc;

use super::report::{EstimateReport, FoldDiagnostics, Method, Sizes};
use super::{ci, plug_in_var};
use crate::data::{Arm, LabeledRow, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::folds::FoldPlan;
use crate::nuisance::{
    fit_density_ratio, fit_e_model, fit_outcome_model, NuisanceConfig, OutcomeFn, PropensityFn,
    RatioFn, VBeta,
};
use crate::rng::stream;

/// Labeled-sample score `1[d=1](y - mu(1,x))/v(1,x) - 1[d=0](y - mu(0,x))/v(0,x)`.
pub fn score_ts_labeled(row: &LabeledRow, mu: &dyn OutcomeFn, v: &VBeta<'_>) -> f64 {
    row.d.sign() * (row.y - mu.predict(row.d, &row.x)) / v.v(row.d, &row.x)
}

/// Covariate score `mu(1, x) - mu(0, x)`.
pub fn score_ts_x(x: &[f64], mu: &dyn OutcomeFn) -> f64 {
    mu.contrast(x)
}

#[derive(Clone)]
pub struct TsNuisance {
    pub outcome: Arc<dyn OutcomeFn>,
    pub propensity: Arc<dyn PropensityFn>,
    pub ratio: Arc<dyn RatioFn>,
    pub converged: bool,
    pub notes: Vec<String>,
}

pub trait TsNuisanceFitter: Send + Sync {
    fn fit(&self, labeled: &[LabeledRow], unlabeled: &[Vec<f64>]) -> Result<TsNuisance>;
}

/// Ridge outcome regressions, logistic `e`, and the classifier density ratio.
#[derive(Debug, Clone)]
pub struct StandardTsFitter {
    pub cfg: NuisanceConfig,
}

impl TsNuisanceFitter for StandardTsFitter {
    fn fit(&self, labeled: &[LabeledRow], unlabeled: &[Vec<f64>]) -> Result<TsNuisance> {
        let cfg = &self.cfg;
        let outcome = fit_outcome_model(labeled, cfg)?;
        let (propensity, e_ok) = fit_ts_propensity(labeled, cfg)?;
        let (ratio, r_ok) = fit_ts_ratio(labeled, unlabeled, cfg);
        Ok(TsNuisance {
            outcome: Arc::new(outcome),
            propensity,
            ratio,
            converged: e_ok && r_ok,
            notes: ts_notes(e_ok, r_ok),
        })
    }
}

pub(crate) fn ts_notes(e_ok: bool, r_ok: bool) -> Vec<String> {
    let mut notes = Vec::new();
    if !e_ok {
        notes.push("propensity model hit the iteration limit".to_string());
    }
    if !r_ok {
        notes.push("density-ratio classifier hit the iteration limit".to_string());
    }
    notes
}

pub(crate) fn fit_ts_propensity(
    labeled: &[LabeledRow],
    cfg: &NuisanceConfig,
) -> Result<(Arc<dyn PropensityFn>, bool)> {
    let e = fit_e_model(labeled, &cfg.basis, cfg.clip_eps, &cfg.opt)?;
    let ok = e.converged();
    Ok((Arc::new(e), ok))
}

pub(crate) fn fit_ts_ratio(
    labeled: &[LabeledRow],
    unlabeled: &[Vec<f64>],
    cfg: &NuisanceConfig,
) -> (Arc<dyn RatioFn>, bool) {
    let xs: Vec<&[f64]> = labeled.iter().map(|r| r.x.as_slice()).collect();
    let zs: Vec<&[f64]> = unlabeled.iter().map(Vec::as_slice).collect();
    let r = fit_density_ratio(&xs, &zs, &cfg.basis, cfg.ratio_clip, &cfg.opt);
    let ok = r.converged();
    (Arc::new(r), ok)
}

/// Held-out nuisance values for one labeled row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsLabeledValues {
    pub d: Arm,
    pub y: f64,
    pub mu1: f64,
    pub mu0: f64,
    pub e1: f64,
    pub r: f64,
}

impl TsLabeledValues {
    pub fn v(&self, beta: f64) -> f64 {
        let e = match self.d {
            Arm::Treated => self.e1,
            Arm::Control => 1.0 - self.e1,
        };
        crate::nuisance::v_beta(e, self.r, beta)
    }

    pub fn residual_term(&self, beta_v: f64) -> f64 {
        let mu = match self.d {
            Arm::Treated => self.mu1,
            Arm::Control => self.mu0,
        };
        self.d.sign() * (self.y - mu) / self.v(beta_v)
    }
}

/// Cross-fitted nuisance values for a two-sample dataset.
#[derive(Debug, Clone)]
pub struct TsCrossFit {
    labeled: Vec<TsLabeledValues>,
    /// `mu(1, z) - mu(0, z)` for every unlabeled row.
    unlabeled: Vec<f64>,
    folds: usize,
    diagnostics: Vec<FoldDiagnostics>,
    warnings: Vec<String>,
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "beta {beta} is not in [0, 1]"
        )))
    }
}

impl TsCrossFit {
    pub fn labeled(&self) -> &[TsLabeledValues] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[f64] {
        &self.unlabeled
    }

    /// Point estimate with the score weight `beta` and the weighting
    /// function `v` evaluated at `beta_v`. With `beta_v` held fixed the
    /// estimate is affine in `beta`.
    pub fn tau_hat_with(&self, beta: f64, beta_v: f64) -> f64 {
        let m = self.labeled.len() as f64;
        let l = self.unlabeled.len() as f64;
        let lab: f64 = self
            .labeled
            .iter()
            .map(|v| v.residual_term(beta_v) + beta * (v.mu1 - v.mu0))
            .sum::<f64>()
            / m;
        lab + (1.0 - beta) * self.unlabeled.iter().sum::<f64>() / l
    }

    pub fn report(&self, beta: f64, level: f64) -> Result<EstimateReport> {
        check_beta(beta)?;
        let lab: Vec<f64> = self
            .labeled
            .iter()
            .map(|v| v.residual_term(beta) + beta * (v.mu1 - v.mu0))
            .collect();
        let (m, l) = (self.labeled.len(), self.unlabeled.len());
        let (mean_m, var_m) = plug_in_var(&lab);
        let (mean_l, var_l) = plug_in_var(&self.unlabeled);
        let tau_hat = mean_m + (1.0 - beta) * mean_l;
        let se = (var_m / m as f64 + (1.0 - beta).powi(2) * var_l / l as f64).sqrt();
        Ok(EstimateReport {
            method: Method::TsEff,
            tau_hat,
            se,
            ci: ci(tau_hat, se, level)?,
            level,
            sizes: Sizes::TwoSample { m, l },
            folds: self.folds,
            diagnostics: self.diagnostics.clone(),
            warnings: self.warnings.clone(),
        })
    }
}

fn labeled_values(row: &LabeledRow, nuis: &TsNuisance) -> TsLabeledValues {
    TsLabeledValues {
        d: row.d,
        y: row.y,
        mu1: nuis.outcome.predict(Arm::Treated, &row.x),
        mu0: nuis.outcome.predict(Arm::Control, &row.x),
        e1: nuis.propensity.e1(&row.x),
        r: nuis.ratio.ratio(&row.x),
    }
}

fn diag(fold: usize, nuis: &TsNuisance) -> FoldDiagnostics {
    FoldDiagnostics {
        fold,
        converged: nuis.converged,
        notes: nuis.notes.clone(),
    }
}

/// Cross-fit with independent fold plans over the labeled and unlabeled
/// samples. Fold `b` trains on both complements and evaluates both held-out
/// parts.
pub fn crossfit_ts(
    data: &TwoSampleDataset,
    folds: usize,
    seed: u64,
    fitter: &dyn TsNuisanceFitter,
) -> Result<TsCrossFit> {
    if folds == 1 {
        let nuis = fitter.fit(data.labeled(), data.unlabeled())?;
        return Ok(TsCrossFit {
            labeled: data
                .labeled()
                .iter()
                .map(|r| labeled_values(r, &nuis))
                .collect(),
            unlabeled: data
                .unlabeled()
                .iter()
                .map(|z| nuis.outcome.contrast(z))
                .collect(),
            folds,
            diagnostics: vec![diag(1, &nuis)],
            warnings: vec!["folds = 1: nuisances are evaluated on their own training data".into()],
        });
    }
    let lab_plan = FoldPlan::with_stream(data.m(), folds, seed, stream::FOLDS)?;
    let unl_plan = FoldPlan::with_stream(data.l(), folds, seed, stream::FOLDS_UNLABELED)?;
    let mut lab_vals = vec![None; data.m()];
    let mut unl_vals = vec![None; data.l()];
    let mut diags = Vec::with_capacity(folds);
    for b in 0..folds {
        let train_lab: Vec<LabeledRow> = lab_plan
            .training(b)
            .into_iter()
            .map(|i| data.labeled()[i].clone())
            .collect();
        for arm in Arm::BOTH {
            if !train_lab.iter().any(|r| r.d == arm) {
                return Err(Error::FoldTooSmall {
                    fold: b + 1,
                    detail: format!(
                        "labeled training split has no rows with d = {}",
                        arm.indicator()
                    ),
                });
            }
        }
        let train_unl: Vec<Vec<f64>> = unl_plan
            .training(b)
            .into_iter()
            .map(|i| data.unlabeled()[i].clone())
            .collect();
        let nuis = fitter.fit(&train_lab, &train_unl)?;
        for i in lab_plan.held_out(b) {
            lab_vals[i] = Some(labeled_values(&data.labeled()[i], &nuis));
        }
        for i in unl_plan.held_out(b) {
            unl_vals[i] = Some(nuis.outcome.contrast(&data.unlabeled()[i]));
        }
        diags.push(diag(b + 1, &nuis));
    }
    Ok(TsCrossFit {
        labeled: lab_vals
            .into_iter()
            .map(|v| v.expect("held out once"))
            .collect(),
        unlabeled: unl_vals
            .into_iter()
            .map(|v| v.expect("held out once"))
            .collect(),
        folds,
        diagnostics: diags,
        warnings: Vec::new(),
    })
}

/// The cross-fitted efficient two-sample estimator at a known `beta_star`.
pub fn estimate_ts_eff(
    data: &TwoSampleDataset,
    beta_star: f64,
    folds: usize,
    seed: u64,
    cfg: &NuisanceConfig,
    level: f64,
) -> Result<EstimateReport> {
    check_beta(beta_star)?;
    ci(0.0, 0.0, level)?;
    cfg.validate()?;
    crossfit_ts(data, folds, seed, &StandardTsFitter { cfg: *cfg })?.report(beta_star, level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_two_sample;
    use crate::nuisance::fixed::{ConstantE, UnitRatio};
    use crate::nuisance::{assemble_v_beta, RatioFn};

    struct Linear;

    impl OutcomeFn for Linear {
        fn predict(&self, arm: Arm, x: &[f64]) -> f64 {
            match arm {
                Arm::Treated => x[0],
                Arm::Control => 0.0,
            }
        }
    }

    struct Ratio(f64);

    impl RatioFn for Ratio {
        fn ratio(&self, _x: &[f64]) -> f64 {
            self.0
        }
    }

    fn row(x: f64, d: Arm, y: f64) -> LabeledRow {
        LabeledRow { x: vec![x], d, y }
    }

    #[test]
    fn score_examples() {
        // e = 0.5 and r = 1 give v = 0.5 at any beta
        let v = assemble_v_beta(&ConstantE(0.5), &UnitRatio, 0.3);
        assert_eq!(
            score_ts_labeled(&row(1.0, Arm::Treated, 3.0), &Linear, &v),
            4.0
        );
        assert_eq!(
            score_ts_labeled(&row(1.0, Arm::Treated, 1.0), &Linear, &v),
            0.0
        );
        let v = assemble_v_beta(&ConstantE(0.9), &Ratio(7.0), 0.2);
        assert_eq!(
            score_ts_labeled(&row(0.0, Arm::Control, 0.0), &Linear, &v),
            0.0
        );
        assert_eq!(score_ts_x(&[1.0], &Linear), 1.0);
    }

    fn toy() -> TwoSampleDataset {
        let mut lab = Vec::new();
        for i in 0..40 {
            let x = (i % 7) as f64 / 3.0 - 1.0;
            let d = if i % 2 == 0 {
                Arm::Treated
            } else {
                Arm::Control
            };
            let y = if d == Arm::Treated { x + 0.5 } else { 0.1 * x }
                + ((i * 37 % 11) as f64 - 5.0) / 10.0;
            lab.push(row(x, d, y));
        }
        let unl = (0..30).map(|i| vec![(i % 5) as f64 / 2.0 - 0.8]).collect();
        validate_two_sample(lab, unl).unwrap()
    }

    #[test]
    fn affine_in_beta_with_frozen_weights() {
        let fit = crossfit_ts(
            &toy(),
            2,
            5,
            &StandardTsFitter {
                cfg: NuisanceConfig::default(),
            },
        )
        .unwrap();
        for beta_v in [0.0, 0.5, 1.0] {
            let t: Vec<f64> = [0.0, 0.5, 1.0]
                .iter()
                .map(|&b| fit.tau_hat_with(b, beta_v))
                .collect();
            assert!((t[1] - 0.5 * (t[0] + t[2])).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_extremes() {
        let fit = crossfit_ts(
            &toy(),
            2,
            5,
            &StandardTsFitter {
                cfg: NuisanceConfig::default(),
            },
        )
        .unwrap();
        // at beta = 1 the unlabeled contrasts carry no weight
        let mut shifted = fit.clone();
        for u in &mut shifted.unlabeled {
            *u += 100.0;
        }
        let a = fit.report(1.0, 0.95).unwrap();
        let b = shifted.report(1.0, 0.95).unwrap();
        assert_eq!(a.tau_hat, b.tau_hat);
        assert_eq!(a.se, b.se);
        // at beta = 0 only the residual terms use the labeled sample
        let m = fit.labeled.len() as f64;
        let l = fit.unlabeled.len() as f64;
        let expect = fit
            .labeled
            .iter()
            .map(|v| v.residual_term(0.0))
            .sum::<f64>()
            / m
            + fit.unlabeled.iter().sum::<f64>() / l;
        assert!((fit.report(0.0, 0.95).unwrap().tau_hat - expect).abs() < 1e-12);
        assert!(fit.report(1.5, 0.95).is_err());
    }

    #[test]
    fn independent_fold_plans() {
        let data = toy();
        let fit = crossfit_ts(
            &data,
            3,
            11,
            &StandardTsFitter {
                cfg: NuisanceConfig::default(),
            },
        )
        .unwrap();
        let rep = fit.report(0.5, 0.9).unwrap();
        assert_eq!(rep.sizes, Sizes::TwoSample { m: 40, l: 30 });
        assert_eq!(rep.diagnostics.len(), 3);
        assert!(matches!(
            crossfit_ts(
                &data,
                31,
                1,
                &StandardTsFitter {
                    cfg: NuisanceConfig::default()
                }
            ),
            Err(Error::BadFoldCount { .. })
        ));
    }
}
