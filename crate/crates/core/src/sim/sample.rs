//! Sampling datasets from a [`DgpSpec`].

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{
    validate_one_sample, validate_two_sample, Arm, LabeledRow, OneSampleDataset, OneSampleRow,
    TwoSampleDataset,
};
use crate::error::{Error, Result};
use crate::oracle::{DgpSpec, DiscreteSpec, GaussianSpec};
use crate::rng::{stream, stream_rng};

/// Draws covariates from one of the two covariate laws of a spec.
enum CovariateSampler<'a> {
    Discrete(&'a DiscreteSpec, WeightedIndex<f64>),
    Gaussian(&'a [f64], Vec<f64>),
}

impl<'a> CovariateSampler<'a> {
    fn new(dgp: &'a DgpSpec, labeled_law: bool) -> Result<Self> {
        match dgp {
            DgpSpec::DiscreteX(s) => {
                let mass = if labeled_law {
                    &s.p_mass
                } else {
                    s.q_mass.as_ref().expect("two-sample spec")
                };
                let idx = WeightedIndex::new(mass)
                    .map_err(|e| Error::InvalidSpec(format!("covariate masses: {e}")))?;
                Ok(Self::Discrete(s, idx))
            }
            DgpSpec::GaussianLinear(GaussianSpec {
                p_mean,
                p_var,
                q_mean,
                q_var,
                ..
            }) => {
                let (mean, var) = if labeled_law {
                    (p_mean, p_var)
                } else {
                    (
                        q_mean.as_ref().expect("two-sample spec"),
                        q_var.as_ref().expect("two-sample spec"),
                    )
                };
                Ok(Self::Gaussian(mean, var.iter().map(|v| v.sqrt()).collect()))
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Self::Discrete(s, idx) => s.support[idx.sample(rng)].clone(),
            Self::Gaussian(mean, sd) => mean
                .iter()
                .zip(sd)
                .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        }
    }
}

fn draw_labeled(dgp: &DgpSpec, x: &[f64], rng: &mut ChaCha8Rng) -> (Arm, f64) {
    let d = if rng.random::<f64>() < dgp.e1(x) {
        Arm::Treated
    } else {
        Arm::Control
    };
    let z: f64 = rng.sample(StandardNormal);
    (d, dgp.mu(d, x) + dgp.sigma2(d, x).sqrt() * z)
}

/// `n` i.i.d. rows of the censoring design: `X ~ p0`, `O ~ pi0(.|X)`, and
/// for observed rows `D ~ e0(.|X)`, `Y ~ N(mu0(D, X), sigma^2(D, X))`.
pub fn sample_one(dgp: &DgpSpec, n: usize, seed: u64) -> Result<OneSampleDataset> {
    dgp.validate()?;
    dgp.require_one_sample()?;
    let xs = CovariateSampler::new(dgp, true)?;
    let mut rng = stream_rng(seed, stream::LABELED);
    let rows = (0..n)
        .map(|_| {
            let x = xs.draw(&mut rng);
            let pi = dgp.pi1(&x).expect("one-sample spec");
            if rng.random::<f64>() < pi {
                let (d, y) = draw_labeled(dgp, &x, &mut rng);
                OneSampleRow::labeled(x, d, y)
            } else {
                OneSampleRow::unlabeled(x)
            }
        })
        .collect();
    validate_one_sample(rows)
}

/// `m` labeled draws from `p0(x, d, y)` and, on an independent stream, `l`
/// covariate draws from `q0`.
pub fn sample_two(dgp: &DgpSpec, m: usize, l: usize, seed: u64) -> Result<TwoSampleDataset> {
    dgp.validate()?;
    dgp.require_two_sample()?;
    let xs = CovariateSampler::new(dgp, true)?;
    let zs = CovariateSampler::new(dgp, false)?;
    let mut rng = stream_rng(seed, stream::LABELED);
    let labeled = (0..m)
        .map(|_| {
            let x = xs.draw(&mut rng);
            let (d, y) = draw_labeled(dgp, &x, &mut rng);
            LabeledRow { x, d, y }
        })
        .collect();
    let mut rng = stream_rng(seed, stream::UNLABELED);
    let unlabeled = (0..l).map(|_| zs.draw(&mut rng)).collect();
    validate_two_sample(labeled, unlabeled)
}
