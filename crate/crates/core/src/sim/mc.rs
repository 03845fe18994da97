//! Replicated Monte Carlo studies.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hooks::{Hook, HookedOsFitter, HookedTsFitter};
use super::sample::{sample_one, sample_two};
use crate::error::{Error, Result};
use crate::estimators::{crossfit_os, crossfit_ts, EstimateReport, Method};
use crate::nuisance::NuisanceConfig;
use crate::oracle::{
    beta_star, bound_v_ipw, bound_v_os, bound_v_tilde_os, bound_v_tilde_ts, bound_v_ts, true_ate,
    DgpSpec,
};

fn default_folds() -> usize {
    2
}

fn default_level() -> f64 {
    0.95
}

/// A replicated study. One-sample methods read `n`; `TS-eff` reads `m` and
/// `l`. Replication `r` (1-based) uses seed `base_seed + r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub dgp: DgpSpec,
    pub method: Method,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub m: usize,
    #[serde(default)]
    pub l: usize,
    pub reps: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Two-sample mixture weight; the oracle grid minimizer when absent.
    #[serde(default)]
    pub beta_star: Option<f64>,
    #[serde(default)]
    pub nuisance: NuisanceConfig,
    #[serde(default)]
    pub hook: Hook,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl McConfig {
    pub fn one_sample(dgp: DgpSpec, method: Method, n: usize, reps: usize) -> Self {
        Self {
            dgp,
            method,
            n,
            m: 0,
            l: 0,
            reps,
            folds: default_folds(),
            beta_star: None,
            nuisance: NuisanceConfig::default(),
            hook: Hook::None,
            base_seed: 0,
            level: default_level(),
        }
    }

    pub fn two_sample(dgp: DgpSpec, m: usize, l: usize, reps: usize) -> Self {
        Self {
            m,
            l,
            n: 0,
            ..Self::one_sample(dgp, Method::TsEff, 0, reps)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        self.dgp.validate()?;
        self.nuisance.validate()?;
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.folds == 0 {
            return Err(Error::BadFoldCount {
                n: self.n.max(self.m),
                folds: 0,
            });
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::BadLevel(self.level));
        }
        let eps = self.nuisance.clip_eps;
        let in_overlap = |c: f64| c > eps && c < 1.0 - eps;
        if self.method.is_one_sample() {
            self.dgp.require_one_sample()?;
            if self.n == 0 {
                return bad("one-sample studies need n >= 1".into());
            }
            match self.hook {
                Hook::ConstantE(_) => return bad("constant_e applies to TS-eff only".into()),
                Hook::ConstantG(c) if !in_overlap(c) => {
                    return bad(format!(
                        "constant_g {c} must lie in (clip_eps, 1 - clip_eps)"
                    ))
                }
                _ => {}
            }
        } else {
            self.dgp.require_two_sample()?;
            if self.m == 0 || self.l == 0 {
                return bad("two-sample studies need m >= 1 and l >= 1".into());
            }
            match self.hook {
                Hook::ConstantG(_) => {
                    return bad("constant_g applies to one-sample methods only".into())
                }
                Hook::ConstantE(c) if !in_overlap(c) => {
                    return bad(format!(
                        "constant_e {c} must lie in (clip_eps, 1 - clip_eps)"
                    ))
                }
                _ => {}
            }
            if let Some(b) = self.beta_star {
                if !(0.0..=1.0).contains(&b) {
                    return bad(format!("beta_star {b} is not in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// One replication's estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub seed: u64,
    pub tau_hat: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub covered: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFailure {
    pub rep: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub method: Method,
    pub hook: Hook,
    pub study: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub reps_requested: usize,
    pub reps_completed: usize,
    pub tau0: f64,
    pub mean_tau_hat: f64,
    pub mc_bias: f64,
    pub mc_se_of_bias: f64,
    /// Sample variance of the estimates across replications.
    pub empirical_variance: f64,
    /// Sample size the variance is scaled by.
    pub normalizer: f64,
    pub scaled_variance: f64,
    /// `n_L * variance` for one-sample unlabeled-limit studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeled_scaled_variance: Option<f64>,
    pub bound_name: Option<String>,
    pub bound_value: Option<f64>,
    pub level: f64,
    pub coverage: f64,
    pub mean_se: f64,
    pub nonconverged_reps: usize,
    pub failures: Vec<RepFailure>,
    /// False when more than 5% of replications failed.
    pub complete: bool,
    #[serde(skip)]
    pub records: Vec<RepRecord>,
}

impl McReport {
    pub fn into_result(self) -> Result<McReport> {
        if self.complete {
            Ok(self)
        } else {
            Err(Error::ReportIncomplete {
                failed: self.failures.len(),
                total: self.reps_requested,
            })
        }
    }
}

/// Everything a run needs beyond the user config.
struct Plan {
    sampling_dgp: Arc<DgpSpec>,
    n: usize,
    beta: Option<f64>,
    tau0: f64,
    normalizer: f64,
    labeled_normalizer: Option<f64>,
    bound: Option<(&'static str, f64)>,
    study: &'static str,
    ratio: Option<f64>,
}

fn resolve_beta(cfg: &McConfig, m: usize, l: usize) -> Result<f64> {
    match cfg.beta_star {
        Some(b) => Ok(b),
        None => beta_star(&cfg.dgp, m as f64 / (m + l) as f64, 0.01),
    }
}

fn estimate_rep(cfg: &McConfig, plan: &Plan, seed: u64) -> Result<EstimateReport> {
    let dgp = &plan.sampling_dgp;
    if cfg.method.is_one_sample() {
        let data = sample_one(dgp, plan.n, seed)?;
        let fitter = HookedOsFitter {
            cfg: cfg.nuisance,
            hook: cfg.hook,
            dgp: dgp.clone(),
            need_outcome: cfg.method != Method::OsIpw,
            need_weights: cfg.method != Method::OsRa,
        };
        crossfit_os(&data, cfg.folds, seed, &fitter)?.report(cfg.method, cfg.level)
    } else {
        let data = sample_two(dgp, cfg.m, cfg.l, seed)?;
        let fitter = HookedTsFitter {
            cfg: cfg.nuisance,
            hook: cfg.hook,
            dgp: dgp.clone(),
        };
        let beta = plan.beta.expect("two-sample plan has beta");
        crossfit_ts(&data, cfg.folds, seed, &fitter)?.report(beta, cfg.level)
    }
}

fn execute(cfg: &McConfig, plan: Plan) -> McReport {
    let outcomes: Vec<(usize, u64, Result<EstimateReport>)> = (1..=cfg.reps)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.base_seed.wrapping_add(r as u64);
            (r, seed, estimate_rep(cfg, &plan, seed))
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (rep, seed, out) in outcomes {
        match out {
            Ok(est) if est.tau_hat.is_finite() && est.se.is_finite() => records.push(RepRecord {
                rep,
                seed,
                tau_hat: est.tau_hat,
                se: est.se,
                ci_lo: est.ci.0,
                ci_hi: est.ci.1,
                covered: est.covers(plan.tau0),
                converged: est.all_converged(),
            }),
            Ok(est) => failures.push(RepFailure {
                rep,
                seed,
                error: format!(
                    "non-finite estimate (tau_hat = {}, se = {})",
                    est.tau_hat, est.se
                ),
            }),
            Err(e) => failures.push(RepFailure {
                rep,
                seed,
                error: e.to_string(),
            }),
        }
    }

    let k = records.len();
    let kf = k as f64;
    let mean = records.iter().map(|r| r.tau_hat).sum::<f64>() / kf;
    let var = if k > 1 {
        records
            .iter()
            .map(|r| (r.tau_hat - mean).powi(2))
            .sum::<f64>()
            / (kf - 1.0)
    } else {
        0.0
    };
    let one_sample = cfg.method.is_one_sample();
    McReport {
        method: cfg.method,
        hook: cfg.hook,
        study: plan.study.to_string(),
        ratio: plan.ratio,
        n: one_sample.then_some(plan.n),
        m: (!one_sample).then_some(cfg.m),
        l: (!one_sample).then_some(cfg.l),
        beta: plan.beta,
        reps_requested: cfg.reps,
        reps_completed: k,
        tau0: plan.tau0,
        mean_tau_hat: mean,
        mc_bias: mean - plan.tau0,
        mc_se_of_bias: (var / kf).sqrt(),
        empirical_variance: var,
        normalizer: plan.normalizer,
        scaled_variance: plan.normalizer * var,
        labeled_scaled_variance: plan.labeled_normalizer.map(|c| c * var),
        bound_name: plan.bound.map(|b| b.0.to_string()),
        bound_value: plan.bound.map(|b| b.1),
        level: cfg.level,
        coverage: records.iter().filter(|r| r.covered).count() as f64 / kf,
        mean_se: records.iter().map(|r| r.se).sum::<f64>() / kf,
        nonconverged_reps: records.iter().filter(|r| !r.converged).count(),
        complete: failures.len() * 20 <= cfg.reps,
        failures,
        records,
    }
}

/// Run `cfg.reps` replications (in parallel on the current rayon pool) and
/// aggregate them in replication order.
///
/// Replication failures are recorded in the report; `complete` turns false
/// when more than 5% fail. Errors are returned only for invalid configs.
pub fn run_mc(cfg: &McConfig) -> Result<McReport> {
    cfg.validate()?;
    let dgp = Arc::new(cfg.dgp.clone());
    let plan = match cfg.method {
        Method::TsEff => {
            let beta = resolve_beta(cfg, cfg.m, cfg.l)?;
            let alpha = cfg.m as f64 / (cfg.m + cfg.l) as f64;
            Plan {
                sampling_dgp: dgp,
                n: 0,
                beta: Some(beta),
                tau0: true_ate(&cfg.dgp, beta),
                normalizer: (cfg.m + cfg.l) as f64,
                labeled_normalizer: None,
                bound: Some(("v_ts", bound_v_ts(&cfg.dgp, beta, alpha)?)),
                study: "mc",
                ratio: None,
            }
        }
        method => Plan {
            sampling_dgp: dgp,
            n: cfg.n,
            beta: None,
            tau0: true_ate(&cfg.dgp, 1.0),
            normalizer: cfg.n as f64,
            labeled_normalizer: None,
            bound: match method {
                Method::OsEff => Some(("v_os", bound_v_os(&cfg.dgp)?)),
                Method::OsIpw => Some(("v_ipw", bound_v_ipw(&cfg.dgp)?)),
                _ => None,
            },
            study: "mc",
            ratio: None,
        },
    };
    Ok(execute(cfg, plan))
}

/// Emulate an unlimited unlabeled sample.
///
/// Two-sample: `cfg.m` labeled rows and `l = ratio * m` unlabeled rows; the
/// variance is scaled by `m` and compared with the unlabeled-limit bound.
///
/// One-sample: `cfg.n` is the target labeled count `n_L`. `pi0` is shrunk by
/// `c = 1 / (E[pi0] (ratio + 1))` and `n = n_L (ratio + 1)`, so about
/// `ratio * n_L` rows are unlabeled. The bound refers to the unshrunk spec,
/// so the variance is scaled by the matching base sample size
/// `c n = n_L / E[pi0]`; `n_L * variance` is reported alongside. The
/// probability clip is shrunk by `c` along with `pi0`.
pub fn run_infinite_unlabeled_study(cfg: &McConfig, ratio: f64) -> Result<McReport> {
    if !(ratio >= 10.0 && ratio.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "unlabeled ratio {ratio} must be at least 10"
        )));
    }
    match cfg.method {
        Method::TsEff => {
            let l = (ratio * cfg.m as f64).round() as usize;
            let run = McConfig { l, ..cfg.clone() };
            run.validate()?;
            let beta = resolve_beta(&run, run.m, l)?;
            let plan = Plan {
                sampling_dgp: Arc::new(run.dgp.clone()),
                n: 0,
                beta: Some(beta),
                tau0: true_ate(&run.dgp, beta),
                normalizer: run.m as f64,
                labeled_normalizer: None,
                bound: Some(("v_tilde_ts", bound_v_tilde_ts(&run.dgp, beta)?)),
                study: "infinite_unlabeled",
                ratio: Some(ratio),
            };
            Ok(execute(&run, plan))
        }
        Method::OsEff => {
            cfg.validate()?;
            let n_l = cfg.n as f64;
            let mean_pi = cfg
                .dgp
                .expect_p(|x| cfg.dgp.pi1(x).expect("one-sample spec"));
            let c = 1.0 / (mean_pi * (ratio + 1.0));
            let scaled = cfg.dgp.with_pi_scaled(c)?;
            let n = (n_l * (ratio + 1.0)).round() as usize;
            let mut run = McConfig { n, ..cfg.clone() };
            run.nuisance.clip_eps *= c;
            let plan = Plan {
                sampling_dgp: Arc::new(scaled),
                n,
                beta: None,
                tau0: true_ate(&cfg.dgp, 1.0),
                normalizer: n_l / mean_pi,
                labeled_normalizer: Some(n_l),
                bound: Some(("v_tilde_os", bound_v_tilde_os(&cfg.dgp)?)),
                study: "infinite_unlabeled",
                ratio: Some(ratio),
            };
            Ok(execute(&run, plan))
        }
        other => Err(Error::InvalidConfig(format!(
            "the unlabeled-limit study supports OS-eff and TS-eff, not {other}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rep_has_binary_coverage() {
        let cfg = McConfig::one_sample(DgpSpec::d1(), Method::OsEff, 400, 1);
        let rep = run_mc(&cfg).unwrap();
        assert_eq!(rep.reps_completed, 1);
        assert!(rep.coverage == 0.0 || rep.coverage == 1.0);
        assert_eq!(rep.scaled_variance, 0.0);
        assert_eq!(rep.bound_value, Some(8.25));
    }

    #[test]
    fn identical_configs_give_identical_reports() {
        let mut cfg = McConfig::two_sample(DgpSpec::d2(), 200, 200, 6);
        cfg.base_seed = 17;
        let a = run_mc(&cfg).unwrap();
        let b = run_mc(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.records, b.records);
        assert_eq!(a.beta, Some(0.5));
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        // with 4 rows most replications lack an arm in some training split
        let cfg = McConfig::one_sample(DgpSpec::d1(), Method::OsEff, 4, 20);
        let rep = run_mc(&cfg).unwrap();
        assert_eq!(rep.reps_completed + rep.failures.len(), 20);
        assert!(!rep.complete);
        assert!(matches!(
            rep.into_result(),
            Err(Error::ReportIncomplete { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = McConfig::one_sample(DgpSpec::d1(), Method::OsEff, 100, 0);
        assert!(run_mc(&cfg).is_err());
        cfg.reps = 2;
        cfg.hook = Hook::ConstantG(0.001);
        assert!(run_mc(&cfg).is_err());
        cfg.hook = Hook::ConstantE(0.3);
        assert!(run_mc(&cfg).is_err());
        let ts = McConfig::two_sample(DgpSpec::d1(), 10, 10, 1);
        assert!(run_mc(&ts).is_err());
        let json = serde_json::to_string(&McConfig::two_sample(DgpSpec::d2(), 10, 20, 3)).unwrap();
        let back: McConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.l, 20);
    }

    #[test]
    fn unlabeled_limit_sizes() {
        let mut cfg = McConfig::one_sample(DgpSpec::d1(), Method::OsEff, 100, 2);
        cfg.base_seed = 3;
        let rep = run_infinite_unlabeled_study(&cfg, 10.0).unwrap();
        assert_eq!(rep.n, Some(1100));
        assert_eq!(rep.normalizer, 200.0);
        assert_eq!(rep.bound_value, Some(8.0));
        assert!(run_infinite_unlabeled_study(&cfg, 5.0).is_err());
    }
}
