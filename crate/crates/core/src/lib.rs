//! Semi-supervised average treatment effect estimation with auxiliary
//! unlabeled covariates.
//!
//! Two observation designs are supported: a single sample in which some units
//! have treatment and outcome censored, and a labeled sample paired with an
//! independent covariate-only sample. The crate provides cross-fitted
//! efficient estimators, nuisance models including generalized Riesz
//! regression, closed-form efficiency bounds for synthetic data-generating
//! processes, and a Monte Carlo harness.

pub mod basis;
pub mod csvio;
pub mod data;
pub mod error;
pub mod estimators;
pub mod folds;
pub mod nuisance;
pub mod optim;
pub mod oracle;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
