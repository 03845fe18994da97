//! Sampling from synthetic DGPs and replicated Monte Carlo studies.

mod hooks;
mod mc;
mod sample;

pub use hooks::{
    Hook, HookedOsFitter, HookedTsFitter, TrueOutcome, TruePropensity, TrueRatio, TrueRepresenter,
};
pub use mc::{run_infinite_unlabeled_study, run_mc, McConfig, McReport, RepFailure, RepRecord};
pub use sample::{sample_one, sample_two};
