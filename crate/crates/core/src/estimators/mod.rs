//! Orthogonal scores, cross-fitted estimators and Wald intervals.

mod ci;
mod os;
mod report;
mod ts;

pub use ci::{ci, normal_quantile};
pub use os::{
    crossfit_os, estimate_os, estimate_os_eff, estimate_os_ipw, estimate_os_ra, score_os,
    OsCrossFit, OsNuisance, OsNuisanceFitter, OsRowValues, StandardOsFitter,
};
pub use report::{EstimateReport, FoldDiagnostics, Method, Sizes};
pub use ts::{
    crossfit_ts, estimate_ts_eff, score_ts_labeled, score_ts_x, StandardTsFitter, TsCrossFit,
    TsLabeledValues, TsNuisance, TsNuisanceFitter,
};

/// Mean and `sqrt(sum (s - mean)^2) / n` of a score vector.
pub(crate) fn mean_and_se(scores: &[f64]) -> (f64, f64) {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let ss: f64 = scores.iter().map(|s| (s - mean).powi(2)).sum();
    (mean, ss.sqrt() / n)
}

/// Plug-in variance `(1/n) sum (s - mean)^2`.
pub(crate) fn plug_in_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

pub(crate) use os::{convergence_notes, fit_os_outcome, fit_os_representer};
pub(crate) use ts::{fit_ts_propensity, fit_ts_ratio, ts_notes};
