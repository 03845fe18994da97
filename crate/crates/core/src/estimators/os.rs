//! One-sample (censoring) estimators.

use std::sync::Arc;

use super::report::{EstimateReport, FoldDiagnostics, Method, Sizes};
use super::{ci, mean_and_se};
use crate::data::{Arm, OneSampleDataset, OneSampleRow};
use crate::error::{Error, Result};
use crate::folds::FoldPlan;
use crate::nuisance::{
    fit_outcome_model, fit_riesz, BregmanGenerator, NuisanceConfig, OutcomeFn, Representer,
    RieszMode,
};

/// The orthogonal score
/// `alpha(o, d, x) (y - mu(d, x)) + mu(1, x) - mu(0, x)`.
pub fn score_os(row: &OneSampleRow, mu: &dyn OutcomeFn, alpha: &dyn Representer) -> f64 {
    let correction = match row.label() {
        Some((d, y)) => alpha.alpha(d, &row.x) * (y - mu.predict(d, &row.x)),
        None => 0.0,
    };
    correction + (mu.predict(Arm::Treated, &row.x) - mu.predict(Arm::Control, &row.x))
}

/// Nuisances fitted on one training split.
#[derive(Clone)]
pub struct OsNuisance {
    pub outcome: Arc<dyn OutcomeFn>,
    pub representer: Arc<dyn Representer>,
    pub converged: bool,
    pub notes: Vec<String>,
}

pub trait OsNuisanceFitter: Send + Sync {
    fn fit(&self, train: &OneSampleDataset) -> Result<OsNuisance>;
}

/// Ridge outcome regressions plus the representer selected by
/// `cfg.riesz_mode`.
#[derive(Debug, Clone)]
pub struct StandardOsFitter {
    pub cfg: NuisanceConfig,
}

impl OsNuisanceFitter for StandardOsFitter {
    fn fit(&self, train: &OneSampleDataset) -> Result<OsNuisance> {
        let outcome = fit_os_outcome(train, &self.cfg)?;
        let (representer, converged) = fit_os_representer(train, &self.cfg)?;
        Ok(OsNuisance {
            outcome,
            representer,
            converged,
            notes: convergence_notes(converged),
        })
    }
}

pub(crate) fn convergence_notes(converged: bool) -> Vec<String> {
    if converged {
        Vec::new()
    } else {
        vec!["weight model hit the iteration limit".to_string()]
    }
}

pub(crate) fn fit_os_outcome(
    train: &OneSampleDataset,
    cfg: &NuisanceConfig,
) -> Result<Arc<dyn OutcomeFn>> {
    Ok(Arc::new(fit_outcome_model(&train.labeled_rows(), cfg)?))
}

/// The representer selected by `cfg.riesz_mode` and its convergence flag.
pub(crate) fn fit_os_representer(
    train: &OneSampleDataset,
    cfg: &NuisanceConfig,
) -> Result<(Arc<dyn Representer>, bool)> {
    let generator = match cfg.riesz_mode {
        RieszMode::MleG => {
            let g = crate::nuisance::fit_gmodel(train, cfg)?;
            let ok = g.converged();
            return Ok((Arc::new(g), ok));
        }
        RieszMode::LsRiesz => BregmanGenerator::Lsif,
        RieszMode::KlRiesz => BregmanGenerator::Ukl,
    };
    let a = fit_riesz(train, generator, &cfg.basis, &cfg.opt)?.with_alpha_bound(1.0 / cfg.clip_eps);
    let ok = a.converged();
    Ok((Arc::new(a), ok))
}

/// Held-out nuisance values for one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsRowValues {
    pub label: Option<(Arm, f64)>,
    pub mu1: f64,
    pub mu0: f64,
    /// `alpha(o, d, x)`; zero for unlabeled rows.
    pub alpha: f64,
}

impl OsRowValues {
    fn mu(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Treated => self.mu1,
            Arm::Control => self.mu0,
        }
    }

    pub fn score(&self, method: Method) -> f64 {
        match method {
            Method::OsEff => {
                let correction = match self.label {
                    Some((d, y)) => self.alpha * (y - self.mu(d)),
                    None => 0.0,
                };
                correction + (self.mu1 - self.mu0)
            }
            Method::OsIpw => match self.label {
                Some((_, y)) => self.alpha * y,
                None => 0.0,
            },
            Method::OsRa => self.mu1 - self.mu0,
            Method::TsEff => panic!("TS-eff is not a one-sample score"),
        }
    }
}

/// Cross-fitted nuisance values for every row of a one-sample dataset.
#[derive(Debug, Clone)]
pub struct OsCrossFit {
    rows: Vec<OsRowValues>,
    n_labeled: usize,
    folds: usize,
    diagnostics: Vec<FoldDiagnostics>,
    warnings: Vec<String>,
}

impl OsCrossFit {
    pub fn rows(&self) -> &[OsRowValues] {
        &self.rows
    }

    pub fn diagnostics(&self) -> &[FoldDiagnostics] {
        &self.diagnostics
    }

    pub fn scores(&self, method: Method) -> Vec<f64> {
        self.rows.iter().map(|r| r.score(method)).collect()
    }

    pub fn report(&self, method: Method, level: f64) -> Result<EstimateReport> {
        if !method.is_one_sample() {
            return Err(Error::InvalidConfig(format!(
                "{method} is not a one-sample method"
            )));
        }
        let (tau_hat, se) = mean_and_se(&self.scores(method));
        let n = self.rows.len();
        Ok(EstimateReport {
            method,
            tau_hat,
            se,
            ci: ci(tau_hat, se, level)?,
            level,
            sizes: Sizes::OneSample {
                n,
                n_labeled: self.n_labeled,
                n_unlabeled: n - self.n_labeled,
            },
            folds: self.folds,
            diagnostics: self.diagnostics.clone(),
            warnings: self.warnings.clone(),
        })
    }
}

fn row_values(row: &OneSampleRow, nuis: &OsNuisance) -> OsRowValues {
    OsRowValues {
        label: row.label(),
        mu1: nuis.outcome.predict(Arm::Treated, &row.x),
        mu0: nuis.outcome.predict(Arm::Control, &row.x),
        alpha: nuis.representer.alpha_row(row),
    }
}

fn diagnostics(fold: usize, nuis: &OsNuisance) -> FoldDiagnostics {
    FoldDiagnostics {
        fold,
        converged: nuis.converged,
        notes: nuis.notes.clone(),
    }
}

/// Fit nuisances on each fold complement and evaluate them on the held-out
/// fold. `folds == 1` fits and evaluates on the full sample (no
/// cross-fitting) and records a warning.
pub fn crossfit_os(
    data: &OneSampleDataset,
    folds: usize,
    seed: u64,
    fitter: &dyn OsNuisanceFitter,
) -> Result<OsCrossFit> {
    if data.n_labeled() == 0 {
        return Err(Error::EmptyDataset("no labeled rows".into()));
    }
    if folds == 1 {
        let nuis = fitter.fit(data)?;
        return Ok(OsCrossFit {
            rows: data.rows().iter().map(|r| row_values(r, &nuis)).collect(),
            n_labeled: data.n_labeled(),
            folds,
            diagnostics: vec![diagnostics(1, &nuis)],
            warnings: vec!["folds = 1: nuisances are evaluated on their own training data".into()],
        });
    }
    let plan = FoldPlan::new(data.n(), folds, seed)?;
    let mut values = vec![None; data.n()];
    let mut diags = Vec::with_capacity(folds);
    for b in 0..folds {
        let train_idx = plan.training(b);
        for arm in Arm::BOTH {
            if !train_idx.iter().any(|&i| data.rows()[i].d == Some(arm)) {
                return Err(Error::FoldTooSmall {
                    fold: b + 1,
                    detail: format!(
                        "training split has no labeled rows with d = {}",
                        arm.indicator()
                    ),
                });
            }
        }
        let nuis = fitter.fit(&data.subset(&train_idx))?;
        for i in plan.held_out(b) {
            values[i] = Some(row_values(&data.rows()[i], &nuis));
        }
        diags.push(diagnostics(b + 1, &nuis));
    }
    Ok(OsCrossFit {
        rows: values
            .into_iter()
            .map(|v| v.expect("every row held out once"))
            .collect(),
        n_labeled: data.n_labeled(),
        folds,
        diagnostics: diags,
        warnings: Vec::new(),
    })
}

/// Cross-fitted one-sample estimate for any one-sample method.
pub fn estimate_os(
    data: &OneSampleDataset,
    method: Method,
    folds: usize,
    seed: u64,
    cfg: &NuisanceConfig,
    level: f64,
) -> Result<EstimateReport> {
    ci(0.0, 0.0, level)?;
    cfg.validate()?;
    let fit = crossfit_os(data, folds, seed, &StandardOsFitter { cfg: *cfg })?;
    fit.report(method, level)
}

/// The cross-fitted efficient estimator.
pub fn estimate_os_eff(
    data: &OneSampleDataset,
    folds: usize,
    seed: u64,
    cfg: &NuisanceConfig,
    level: f64,
) -> Result<EstimateReport> {
    estimate_os(data, Method::OsEff, folds, seed, cfg, level)
}

fn fixed_report(
    data: &OneSampleDataset,
    method: Method,
    scores: Vec<f64>,
    level: f64,
) -> Result<EstimateReport> {
    let (tau_hat, se) = mean_and_se(&scores);
    Ok(EstimateReport {
        method,
        tau_hat,
        se,
        ci: ci(tau_hat, se, level)?,
        level,
        sizes: Sizes::OneSample {
            n: data.n(),
            n_labeled: data.n_labeled(),
            n_unlabeled: data.n_unlabeled(),
        },
        folds: 1,
        diagnostics: Vec::new(),
        warnings: Vec::new(),
    })
}

/// IPW estimate `(1/n) sum alpha(o, d, x) y` with given weights.
pub fn estimate_os_ipw(
    data: &OneSampleDataset,
    alpha: &dyn Representer,
    level: f64,
) -> Result<EstimateReport> {
    let scores = data
        .rows()
        .iter()
        .map(|r| match r.label() {
            Some((d, y)) => alpha.alpha(d, &r.x) * y,
            None => 0.0,
        })
        .collect();
    fixed_report(data, Method::OsIpw, scores, level)
}

/// Regression-adjustment estimate averaging `mu(1, x) - mu(0, x)` over all
/// rows. Its standard error ignores the outcome-model fitting noise.
pub fn estimate_os_ra(
    data: &OneSampleDataset,
    mu: &dyn OutcomeFn,
    level: f64,
) -> Result<EstimateReport> {
    let scores = data.rows().iter().map(|r| mu.contrast(&r.x)).collect();
    fixed_report(data, Method::OsRa, scores, level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_one_sample;
    use crate::nuisance::fixed::{ConstantG, ZeroOutcome};

    /// `mu(1, x) = x`, `mu(0, x) = 0`.
    struct Linear;

    impl OutcomeFn for Linear {
        fn predict(&self, arm: Arm, x: &[f64]) -> f64 {
            match arm {
                Arm::Treated => x[0],
                Arm::Control => 0.0,
            }
        }
    }

    /// `g(1|x) = 0.5`, `g(0|x) = 0.25`.
    struct Uneven;

    impl Representer for Uneven {
        fn alpha(&self, arm: Arm, _x: &[f64]) -> f64 {
            match arm {
                Arm::Treated => 1.0 / 0.5,
                Arm::Control => -1.0 / 0.25,
            }
        }
    }

    #[test]
    fn score_examples() {
        let treated = OneSampleRow::labeled(vec![1.0], Arm::Treated, 3.0);
        assert!((score_os(&treated, &Linear, &Uneven) - 5.0).abs() < 1e-12);
        let unobserved = OneSampleRow::unlabeled(vec![1.0]);
        assert_eq!(score_os(&unobserved, &Linear, &Uneven), 1.0);
        let control = OneSampleRow::labeled(vec![1.0], Arm::Control, 2.0);
        assert!((score_os(&control, &Linear, &Uneven) + 7.0).abs() < 1e-12);
    }

    #[test]
    fn ipw_examples() {
        let one =
            validate_one_sample(vec![OneSampleRow::labeled(vec![0.0], Arm::Treated, 2.0)]).unwrap();
        assert_eq!(
            estimate_os_ipw(&one, &ConstantG(0.5), 0.95)
                .unwrap()
                .tau_hat,
            4.0
        );
        let zeros = validate_one_sample(vec![
            OneSampleRow::labeled(vec![0.0], Arm::Treated, 0.0),
            OneSampleRow::labeled(vec![1.0], Arm::Control, 0.0),
            OneSampleRow::unlabeled(vec![1.0]),
        ])
        .unwrap();
        assert_eq!(
            estimate_os_ipw(&zeros, &ConstantG(0.3), 0.95)
                .unwrap()
                .tau_hat,
            0.0
        );
    }

    #[test]
    fn ra_examples() {
        let data = validate_one_sample(
            [0.0, 1.0, 1.0, 0.0]
                .iter()
                .map(|&x| OneSampleRow::unlabeled(vec![x]))
                .collect(),
        )
        .unwrap();
        assert_eq!(estimate_os_ra(&data, &Linear, 0.95).unwrap().tau_hat, 0.5);
        assert_eq!(
            estimate_os_ra(&data, &ZeroOutcome, 0.95).unwrap().tau_hat,
            0.0
        );
    }

    #[test]
    fn row_scores_center() {
        let v = [
            OsRowValues {
                label: Some((Arm::Treated, 2.0)),
                mu1: 1.0,
                mu0: 0.5,
                alpha: 3.0,
            },
            OsRowValues {
                label: None,
                mu1: 0.2,
                mu0: -0.1,
                alpha: 0.0,
            },
        ];
        assert_eq!(v[0].score(Method::OsEff), 3.5);
        assert_eq!(v[0].score(Method::OsIpw), 6.0);
        assert_eq!(v[1].score(Method::OsIpw), 0.0);
        assert!((v[1].score(Method::OsRa) - 0.3).abs() < 1e-15);
    }
}
