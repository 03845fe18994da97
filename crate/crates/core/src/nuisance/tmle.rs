//! TMLE fluctuation of the outcome model along a representer, and the
//! iterative debiasing loop that alternates it with weighted Riesz regression.

use std::sync::Arc;

use super::outcome::fit_outcome_model;
use super::riesz::{fit_weighted_riesz, BregmanGenerator, RieszModel};
use super::{NuisanceConfig, OutcomeFn, OutcomeModel, Representer};
use crate::data::{LabeledRow, OneSampleDataset};
use crate::error::{Error, Result};

/// `mu + epsilon * alpha(1, d, x)` with
/// `epsilon = sum alpha r / sum alpha^2` over the labeled rows, which zeroes
/// `sum alpha (y - mu)` whenever the clip bound is inactive.
pub fn tmle_fluctuate(
    mu: &OutcomeModel,
    alpha: Arc<dyn Representer>,
    labeled: &[LabeledRow],
) -> Result<OutcomeModel> {
    let (mut num, mut den) = (0.0, 0.0);
    for r in labeled {
        let a = alpha.alpha(r.d, &r.x);
        num += a * (r.y - mu.predict(r.d, &r.x));
        den += a * a;
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(mu.with_fluctuation(num / den, alpha))
}

/// `sum alpha(1, d, x) (y - mu(d, x))` over labeled rows.
pub fn score_residual(mu: &dyn OutcomeFn, alpha: &dyn Representer, labeled: &[LabeledRow]) -> f64 {
    labeled
        .iter()
        .map(|r| alpha.alpha(r.d, &r.x) * (r.y - mu.predict(r.d, &r.x)))
        .sum()
}

/// Sample mean of the orthogonal one-sample score.
pub fn neyman_plug_in(data: &OneSampleDataset, mu: &dyn OutcomeFn, alpha: &dyn Representer) -> f64 {
    let total: f64 = data
        .rows()
        .iter()
        .map(|r| {
            let correction = match r.label() {
                Some((d, y)) => alpha.alpha(d, &r.x) * (y - mu.predict(d, &r.x)),
                None => 0.0,
            };
            correction + mu.contrast(&r.x)
        })
        .sum();
    total / data.n() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdmlStep {
    /// Weighted Riesz objective at the fitted representer.
    pub riesz_loss: f64,
    pub riesz_converged: bool,
    pub epsilon: f64,
    /// `|sum alpha (y - mu)|` after the fluctuation.
    pub score_residual: f64,
    /// Plug-in estimate from the current pair.
    pub tau_hat: f64,
}

#[derive(Debug, Clone)]
pub struct DdmlResult {
    pub outcome: OutcomeModel,
    pub riesz: Arc<RieszModel>,
    pub trace: Vec<DdmlStep>,
}

/// Start from the ridge outcome fit, then for each step fit a weighted
/// representer (bounded by `1 / clip_eps`) on the current residuals and fluctuate the outcome model
/// along it.
pub fn ddml_iterate(
    data: &OneSampleDataset,
    steps: usize,
    generator: BregmanGenerator,
    cfg: &NuisanceConfig,
) -> Result<DdmlResult> {
    if steps == 0 {
        return Err(Error::InvalidConfig("iteration count must be >= 1".into()));
    }
    let labeled = data.labeled_rows();
    let mut mu = fit_outcome_model(&labeled, cfg)?;
    let mut trace = Vec::with_capacity(steps);
    let mut riesz = None;
    for _ in 0..steps {
        let residuals: Vec<f64> = data
            .rows()
            .iter()
            .map(|r| match r.label() {
                Some((d, y)) => y - mu.predict(d, &r.x),
                None => 0.0,
            })
            .collect();
        let alpha = Arc::new(
            fit_weighted_riesz(
                data,
                &residuals,
                generator,
                &cfg.basis,
                cfg.ridge_lambda,
                &cfg.opt,
            )?
            .with_alpha_bound(1.0 / cfg.clip_eps),
        );
        mu = tmle_fluctuate(&mu, alpha.clone(), &labeled)?;
        let epsilon = mu.fluctuations().last().map_or(0.0, |f| f.epsilon);
        trace.push(DdmlStep {
            riesz_loss: alpha.objective(),
            riesz_converged: alpha.converged(),
            epsilon,
            score_residual: score_residual(&mu, alpha.as_ref(), &labeled).abs(),
            tau_hat: neyman_plug_in(data, &mu, alpha.as_ref()),
        });
        riesz = Some(alpha);
    }
    Ok(DdmlResult {
        outcome: mu,
        riesz: riesz.expect("at least one step"),
        trace,
    })
}
