//! Generalized (Bregman) Riesz regression for the one-sample representer
//! `alpha(o, d, x)`.
//!
//! The empirical objective for a representer with arm functions `a1`, `a0` is
//!
//! ```text
//! (1/n) sum_i 1[O_i = 1] { f'(alpha_i) alpha_i - f(alpha_i) }
//!   - (1/n) sum_i { f'(a1(X_i)) - f'(a0(X_i)) }
//! ```
//!
//! with the second sum over every row, labeled or not. Adding an affine
//! function to `f` leaves every Bregman divergence unchanged, so the loss is
//! evaluated with the normalized generators `a^2` (LSIF) and
//! `(|a| - 1) log(|a| - 1) - |a|` (UKL). That choice makes the objective equal
//! to `-2 (a1 - a0) + 1[O=1] alpha^2` and
//! `1[O=1] (log(|alpha| - 1) + |alpha|) - log(a1 - 1) - log(-a0 - 1)`
//! respectively, with no additive constants.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::outcome::fit_arm;
use super::Representer;
use crate::basis::{dot, symmetrize_lower, BasisSpec, Design, FittedBasis};
use crate::data::{Arm, OneSampleDataset};
use crate::error::{Error, Result};
use crate::optim::{minimize, Objective, OptConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BregmanGenerator {
    /// `f(a) = (a - 1)^2`.
    Lsif,
    /// `f(a) = (|a| - 1) log(|a| - 1) + |a|` on `|a| > 1`.
    Ukl,
}

impl FromStr for BregmanGenerator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lsif" => Ok(Self::Lsif),
            "ukl" => Ok(Self::Ukl),
            other => Err(format!(
                "unknown generator {other:?} (expected lsif or ukl)"
            )),
        }
    }
}

impl BregmanGenerator {
    pub fn in_domain(self, a: f64) -> bool {
        match self {
            Self::Lsif => a.is_finite(),
            Self::Ukl => a.is_finite() && a.abs() > 1.0,
        }
    }

    /// The generator. NaN outside the domain.
    pub fn f(self, a: f64) -> f64 {
        match self {
            Self::Lsif => (a - 1.0).powi(2),
            Self::Ukl => ukl_or_nan(a, |t| t * t.ln() + a.abs()),
        }
    }

    pub fn df(self, a: f64) -> f64 {
        match self {
            Self::Lsif => 2.0 * (a - 1.0),
            Self::Ukl => ukl_or_nan(a, |t| a.signum() * (t.ln() + 2.0)),
        }
    }

    /// `f` minus an affine function of `a` (piecewise on the two UKL
    /// half-lines).
    pub fn f_normalized(self, a: f64) -> f64 {
        match self {
            Self::Lsif => a * a,
            Self::Ukl => ukl_or_nan(a, |t| t * t.ln() - a.abs()),
        }
    }

    pub fn df_normalized(self, a: f64) -> f64 {
        match self {
            Self::Lsif => 2.0 * a,
            Self::Ukl => ukl_or_nan(a, |t| a.signum() * t.ln()),
        }
    }
}

fn ukl_or_nan(a: f64, f: impl FnOnce(f64) -> f64) -> f64 {
    let t = a.abs() - 1.0;
    if t > 0.0 {
        f(t)
    } else {
        f64::NAN
    }
}

/// Fitted representer. LSIF arms are linear in `phi(x)`; UKL arms are
/// `1 + exp(phi . theta1)` and `-1 - exp(phi . theta0)`.
///
/// As a [`Representer`] the values are clamped to `[-alpha_bound, alpha_bound]`;
/// [`RieszModel::a`] and the losses use the unclamped link.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszModel {
    pub generator: BregmanGenerator,
    basis: FittedBasis,
    pub theta1: Vec<f64>,
    pub theta0: Vec<f64>,
    alpha_bound: f64,
    converged: bool,
    iterations: usize,
    objective: f64,
}

impl RieszModel {
    pub fn from_parts(
        generator: BregmanGenerator,
        basis: FittedBasis,
        theta1: Vec<f64>,
        theta0: Vec<f64>,
    ) -> Self {
        assert_eq!(theta1.len(), basis.dim());
        assert_eq!(theta0.len(), basis.dim());
        Self {
            generator,
            basis,
            theta1,
            theta0,
            alpha_bound: f64::INFINITY,
            converged: true,
            iterations: 0,
            objective: f64::NAN,
        }
    }

    pub fn basis(&self) -> &FittedBasis {
        &self.basis
    }

    /// Bound `|alpha| <= bound` on representer values, typically
    /// `1 / clip_eps` to match the clamp on `g`.
    pub fn with_alpha_bound(mut self, bound: f64) -> Self {
        self.alpha_bound = bound;
        self
    }

    pub fn alpha_bound(&self) -> f64 {
        self.alpha_bound
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Objective value reached by the fit (NaN for hand-built models).
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Stacked parameters `[theta1; theta0]`.
    pub fn theta(&self) -> DVector<f64> {
        DVector::from_iterator(
            2 * self.basis.dim(),
            self.theta1.iter().chain(&self.theta0).copied(),
        )
    }

    pub fn with_theta(&self, theta: &DVector<f64>) -> Self {
        let p = self.basis.dim();
        let mut next = self.clone();
        next.theta1 = theta.as_slice()[..p].to_vec();
        next.theta0 = theta.as_slice()[p..].to_vec();
        next
    }

    fn eta(&self, arm: Arm, x: &[f64]) -> f64 {
        match arm {
            Arm::Treated => self.basis.dot(x, &self.theta1),
            Arm::Control => self.basis.dot(x, &self.theta0),
        }
    }

    pub fn a(&self, arm: Arm, x: &[f64]) -> f64 {
        link(self.generator, arm, self.eta(arm, x))
    }
}

fn link(generator: BregmanGenerator, arm: Arm, eta: f64) -> f64 {
    match (generator, arm) {
        (BregmanGenerator::Lsif, _) => eta,
        (BregmanGenerator::Ukl, Arm::Treated) => 1.0 + eta.exp(),
        (BregmanGenerator::Ukl, Arm::Control) => -1.0 - eta.exp(),
    }
}

impl Representer for RieszModel {
    fn alpha(&self, arm: Arm, x: &[f64]) -> f64 {
        self.a(arm, x).clamp(-self.alpha_bound, self.alpha_bound)
    }
}

/// Per-row weights of the objective: `labeled` multiplies the `1[O=1]` term,
/// `moment1` / `moment0` multiply `f'(a1)` / `f'(a0)` in the moment term.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszWeights {
    pub labeled: Vec<f64>,
    pub moment1: Vec<f64>,
    pub moment0: Vec<f64>,
}

impl RieszWeights {
    pub fn unit(n: usize) -> Self {
        Self {
            labeled: vec![1.0; n],
            moment1: vec![1.0; n],
            moment0: vec![1.0; n],
        }
    }

    /// Squared-residual weights. `residuals` has one entry per dataset row;
    /// entries of unlabeled rows are ignored. Labeled rows get `r_i^2`. The
    /// moment weights are `s_d(x_i)`, a ridge regression of `r^2` on `phi(x)`
    /// within arm `d`, clamped at zero, so that both terms target the same
    /// conditional second moment.
    pub fn from_residuals(
        data: &OneSampleDataset,
        residuals: &[f64],
        basis: &BasisSpec,
        lambda: f64,
    ) -> Result<Self> {
        if residuals.len() != data.n() {
            return Err(Error::InvalidConfig(format!(
                "expected {} residuals, got {}",
                data.n(),
                residuals.len()
            )));
        }
        let mut labeled = vec![0.0; data.n()];
        for (i, r) in data.rows().iter().enumerate() {
            if r.observed {
                if !residuals[i].is_finite() {
                    return Err(Error::NonFiniteValue {
                        row: i + 1,
                        field: "residual".into(),
                    });
                }
                labeled[i] = residuals[i] * residuals[i];
            }
        }
        let mut moments = [vec![0.0; data.n()], vec![0.0; data.n()]];
        for (slot, arm) in Arm::BOTH.into_iter().enumerate() {
            let (xs, ys): (Vec<&[f64]>, Vec<f64>) = data
                .rows()
                .iter()
                .zip(&labeled)
                .filter(|(r, _)| r.d == Some(arm))
                .map(|(r, &w)| (r.x.as_slice(), w))
                .unzip();
            let fit = fit_arm(arm, data.k(), &xs, &ys, basis, lambda)?;
            for (out, r) in moments[slot].iter_mut().zip(data.rows()) {
                *out = fit.raw(&r.x).max(0.0);
            }
        }
        let [moment1, moment0] = moments;
        Ok(Self {
            labeled,
            moment1,
            moment0,
        })
    }
}

/// The unweighted empirical objective.
pub fn riesz_loss(model: &RieszModel, data: &OneSampleDataset) -> Result<f64> {
    weighted_riesz_loss(model, data, &RieszWeights::unit(data.n()))
}

/// The weighted empirical objective, evaluated directly from the generator.
pub fn weighted_riesz_loss(
    model: &RieszModel,
    data: &OneSampleDataset,
    weights: &RieszWeights,
) -> Result<f64> {
    let gen = model.generator;
    let mut labeled = 0.0;
    let mut moment = 0.0;
    for (i, row) in data.rows().iter().enumerate() {
        let a1 = model.a(Arm::Treated, &row.x);
        let a0 = model.a(Arm::Control, &row.x);
        if !gen.in_domain(a1) || !gen.in_domain(a0) {
            return Err(Error::DomainViolation(format!(
                "row {}: a1 = {a1}, a0 = {a0}",
                i + 1
            )));
        }
        if let Some(d) = row.d {
            let alpha = match d {
                Arm::Treated => a1,
                Arm::Control => a0,
            };
            labeled +=
                weights.labeled[i] * (gen.df_normalized(alpha) * alpha - gen.f_normalized(alpha));
        }
        moment +=
            weights.moment1[i] * gen.df_normalized(a1) - weights.moment0[i] * gen.df_normalized(a0);
    }
    Ok((labeled - moment) / data.n() as f64)
}

/// Analytic gradient of the (weighted) objective with respect to
/// `[theta1; theta0]`.
pub fn riesz_loss_gradient(
    model: &RieszModel,
    data: &OneSampleDataset,
    weights: Option<&RieszWeights>,
) -> DVector<f64> {
    let unit;
    let weights = match weights {
        Some(w) => w,
        None => {
            unit = RieszWeights::unit(data.n());
            &unit
        }
    };
    let obj = RieszObjective::new(model.generator, model.basis(), data, weights);
    obj.eval(&model.theta()).1
}

struct RieszObjective<'a> {
    gen: BregmanGenerator,
    design: Design,
    arms: Vec<Option<Arm>>,
    weights: &'a RieszWeights,
}

impl<'a> RieszObjective<'a> {
    fn new(
        gen: BregmanGenerator,
        basis: &FittedBasis,
        data: &OneSampleDataset,
        weights: &'a RieszWeights,
    ) -> Self {
        Self {
            gen,
            design: basis.design(data.rows().iter().map(|r| r.x.as_slice())),
            arms: data.rows().iter().map(|r| r.d).collect(),
            weights,
        }
    }

    /// Value, first and second derivative in `eta` of one arm's contribution
    /// from row `i`.
    fn terms(&self, i: usize, arm: Arm, eta: f64) -> (f64, f64, f64) {
        let w = self.weights;
        let (mut v, mut g, mut h) = (0.0, 0.0, 0.0);
        if self.arms[i] == Some(arm) {
            let wl = w.labeled[i];
            match self.gen {
                BregmanGenerator::Lsif => {
                    v += wl * eta * eta;
                    g += 2.0 * wl * eta;
                    h += 2.0 * wl;
                }
                BregmanGenerator::Ukl => {
                    let e = eta.exp();
                    v += wl * (eta + 1.0 + e);
                    g += wl * (1.0 + e);
                    h += wl * e;
                }
            }
        }
        match (self.gen, arm) {
            (BregmanGenerator::Lsif, Arm::Treated) => {
                v -= 2.0 * w.moment1[i] * eta;
                g -= 2.0 * w.moment1[i];
            }
            (BregmanGenerator::Lsif, Arm::Control) => {
                v += 2.0 * w.moment0[i] * eta;
                g += 2.0 * w.moment0[i];
            }
            (BregmanGenerator::Ukl, Arm::Treated) => {
                v -= w.moment1[i] * eta;
                g -= w.moment1[i];
            }
            (BregmanGenerator::Ukl, Arm::Control) => {
                v -= w.moment0[i] * eta;
                g -= w.moment0[i];
            }
        }
        (v, g, h)
    }
}

impl Objective for RieszObjective<'_> {
    fn dim(&self) -> usize {
        2 * self.design.p()
    }

    fn value(&self, theta: &DVector<f64>) -> f64 {
        let p = self.design.p();
        let (t1, t0) = theta.as_slice().split_at(p);
        let mut total = 0.0;
        for (i, phi) in self.design.rows().enumerate() {
            total += self.terms(i, Arm::Treated, dot(phi, t1)).0;
            total += self.terms(i, Arm::Control, dot(phi, t0)).0;
        }
        let v = total / self.arms.len() as f64;
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    fn eval(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let p = self.design.p();
        let n = self.arms.len() as f64;
        let (t1, t0) = theta.as_slice().split_at(p);
        let mut total = 0.0;
        let mut grad = DVector::<f64>::zeros(2 * p);
        let mut hess = DMatrix::<f64>::zeros(2 * p, 2 * p);
        for (i, phi) in self.design.rows().enumerate() {
            for (block, arm, t) in [(0, Arm::Treated, t1), (p, Arm::Control, t0)] {
                let (v, g, h) = self.terms(i, arm, dot(phi, t));
                total += v;
                for r in 0..p {
                    grad[block + r] += g * phi[r];
                    if h != 0.0 {
                        let hr = h * phi[r];
                        for c in 0..=r {
                            hess[(block + r, block + c)] += hr * phi[c];
                        }
                    }
                }
            }
        }
        symmetrize_lower(&mut hess);
        (total / n, grad / n, hess / n)
    }
}

/// Minimize the unweighted objective.
pub fn fit_riesz(
    data: &OneSampleDataset,
    generator: BregmanGenerator,
    basis: &BasisSpec,
    opt: &OptConfig,
) -> Result<RieszModel> {
    fit_with(data, &RieszWeights::unit(data.n()), generator, basis, opt)
}

/// Minimize the squared-residual weighted objective (see
/// [`RieszWeights::from_residuals`]); `lambda` is the ridge penalty of the
/// moment-weight regressions.
pub fn fit_weighted_riesz(
    data: &OneSampleDataset,
    residuals: &[f64],
    generator: BregmanGenerator,
    basis: &BasisSpec,
    lambda: f64,
    opt: &OptConfig,
) -> Result<RieszModel> {
    let weights = RieszWeights::from_residuals(data, residuals, basis, lambda)?;
    fit_with(data, &weights, generator, basis, opt)
}

/// Minimize the objective under explicit weights.
pub fn fit_with(
    data: &OneSampleDataset,
    weights: &RieszWeights,
    generator: BregmanGenerator,
    basis: &BasisSpec,
    opt: &OptConfig,
) -> Result<RieszModel> {
    for arm in Arm::BOTH {
        if !data.rows().iter().any(|r| r.d == Some(arm)) {
            return Err(Error::InsufficientArmData {
                arm: arm.indicator(),
                available: 0,
                required: 1,
            });
        }
    }
    let fitted = basis.fit(data.k(), data.rows().iter().map(|r| r.x.as_slice()));
    let obj = RieszObjective::new(generator, &fitted, data, weights);
    let res = minimize(&obj, DVector::zeros(obj.dim()), opt);
    let p = fitted.dim();
    Ok(RieszModel {
        generator,
        theta1: res.theta.as_slice()[..p].to_vec(),
        theta0: res.theta.as_slice()[p..].to_vec(),
        basis: fitted,
        alpha_bound: f64::INFINITY,
        converged: res.converged,
        iterations: res.iterations,
        objective: res.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{validate_one_sample, OneSampleRow};
    use proptest::prelude::*;

    fn constant_model(gen: BregmanGenerator, a1: f64, a0: f64) -> RieszModel {
        let basis = BasisSpec::intercept_only().fit(1, std::iter::empty());
        let inv = |a: f64| match gen {
            BregmanGenerator::Lsif => a,
            BregmanGenerator::Ukl => (a.abs() - 1.0).ln(),
        };
        RieszModel::from_parts(gen, basis, vec![inv(a1)], vec![inv(a0)])
    }

    fn mixed_data() -> OneSampleDataset {
        validate_one_sample(vec![
            OneSampleRow::labeled(vec![0.3], Arm::Treated, 1.0),
            OneSampleRow::labeled(vec![-0.2], Arm::Control, 0.5),
            OneSampleRow::unlabeled(vec![1.1]),
            OneSampleRow::labeled(vec![0.7], Arm::Treated, 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn lsif_single_treated_row() {
        let data =
            validate_one_sample(vec![OneSampleRow::labeled(vec![0.0], Arm::Treated, 1.0)]).unwrap();
        let m = constant_model(BregmanGenerator::Lsif, 4.0, -4.0);
        assert_eq!(riesz_loss(&m, &data).unwrap(), 0.0);
        let zero = constant_model(BregmanGenerator::Lsif, 0.0, 0.0);
        assert_eq!(riesz_loss(&zero, &mixed_data()).unwrap(), 0.0);
    }

    #[test]
    fn loss_matches_expanded_displays() {
        let data = mixed_data();
        for (a1, a0) in [(2.5, -3.0), (1.5, -1.2), (7.0, -2.0)] {
            let lsif = constant_model(BregmanGenerator::Lsif, a1, a0);
            let mut expect = 0.0;
            for r in data.rows() {
                expect += -2.0 * (a1 - a0);
                match r.d {
                    Some(Arm::Treated) => expect += a1 * a1,
                    Some(Arm::Control) => expect += a0 * a0,
                    None => {}
                }
            }
            let got = riesz_loss(&lsif, &data).unwrap();
            assert!(
                (got - expect / 4.0).abs() < 1e-12,
                "{got} vs {}",
                expect / 4.0
            );

            let ukl = constant_model(BregmanGenerator::Ukl, a1, a0);
            let mut expect = 0.0;
            for r in data.rows() {
                expect += -(a1 - 1.0).ln() - (-a0 - 1.0).ln();
                let alpha = match r.d {
                    Some(Arm::Treated) => a1,
                    Some(Arm::Control) => a0,
                    None => continue,
                };
                expect += (alpha.abs() - 1.0).ln() + alpha.abs();
            }
            let got = riesz_loss(&ukl, &data).unwrap();
            assert!((got - expect / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_generators_differ_by_affine_terms() {
        for gen in [BregmanGenerator::Lsif, BregmanGenerator::Ukl] {
            for &a in &[1.5, 2.0, 7.0, -1.3, -4.0] {
                let (x, y) = (a, a * 1.7);
                // the Bregman divergence is invariant to the normalization
                let bd =
                    |f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64| f(y) - f(x) - df(x) * (y - x);
                let raw = bd(&|t| gen.f(t), &|t| gen.df(t));
                let norm = bd(&|t| gen.f_normalized(t), &|t| gen.df_normalized(t));
                assert!((raw - norm).abs() < 1e-10 * raw.abs().max(1.0));
            }
        }
    }

    #[test]
    fn representer_values_respect_the_bound() {
        let m = constant_model(BregmanGenerator::Lsif, 1e6, -3.0).with_alpha_bound(100.0);
        assert_eq!(m.alpha(Arm::Treated, &[0.0]), 100.0);
        assert_eq!(m.alpha(Arm::Control, &[0.0]), -3.0);
        assert_eq!(m.a(Arm::Treated, &[0.0]), 1e6);
    }

    #[test]
    fn ukl_domain_is_checked() {
        let basis = BasisSpec::intercept_only().fit(1, std::iter::empty());
        // exp(-800) underflows, collapsing a1 onto the boundary
        let m = RieszModel::from_parts(BregmanGenerator::Ukl, basis, vec![-800.0], vec![0.0]);
        assert!(matches!(
            riesz_loss(&m, &mixed_data()),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn no_unlabeled_rows_is_labeled_only_objective() {
        let rows = vec![
            OneSampleRow::labeled(vec![0.0], Arm::Treated, 1.0),
            OneSampleRow::labeled(vec![0.0], Arm::Control, 0.0),
            OneSampleRow::labeled(vec![1.0], Arm::Control, 0.5),
            OneSampleRow::labeled(vec![1.0], Arm::Treated, 2.0),
            OneSampleRow::labeled(vec![1.0], Arm::Treated, 3.0),
        ];
        let data = validate_one_sample(rows).unwrap();
        let m = fit_riesz(
            &data,
            BregmanGenerator::Lsif,
            &BasisSpec::default(),
            &OptConfig::default(),
        )
        .unwrap();
        assert!(m.converged());
        // labeled-only LSIF with a saturated model: a_d(x) = n_x / n_{x,d}
        assert!((m.a(Arm::Treated, &[0.0]) - 2.0).abs() < 1e-9);
        assert!((m.a(Arm::Treated, &[1.0]) - 1.5).abs() < 1e-9);
        assert!((m.a(Arm::Control, &[0.0]) + 2.0).abs() < 1e-9);
        assert!((m.a(Arm::Control, &[1.0]) + 3.0).abs() < 1e-9);
    }

    fn random_data(seed: u64, n: usize) -> OneSampleDataset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<OneSampleRow> = (0..n)
            .map(|_| {
                let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                match rng.random_range(0..3) {
                    0 => OneSampleRow::labeled(x, Arm::Treated, rng.random_range(-2.0..2.0)),
                    1 => OneSampleRow::labeled(x, Arm::Control, rng.random_range(-2.0..2.0)),
                    _ => OneSampleRow::unlabeled(x),
                }
            })
            .collect();
        rows[0] = OneSampleRow::labeled(vec![0.1, 0.2], Arm::Treated, 1.0);
        rows[1] = OneSampleRow::labeled(vec![0.3, -0.2], Arm::Control, -1.0);
        validate_one_sample(rows).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn analytic_gradient_matches_central_differences(
            seed in 0u64..1_000_000,
            theta in proptest::collection::vec(-0.8f64..0.8, 12),
            gen_ukl in any::<bool>(),
            weighted in any::<bool>(),
        ) {
            let gen = if gen_ukl { BregmanGenerator::Ukl } else { BregmanGenerator::Lsif };
            let data = random_data(seed, 40);
            let spec = BasisSpec { degree: 2, intercept: true, standardize: true };
            let basis = spec.fit(2, data.rows().iter().map(|r| r.x.as_slice()));
            let model = RieszModel::from_parts(gen, basis, theta[..6].to_vec(), theta[6..].to_vec());
            let weights = if weighted {
                let res: Vec<f64> = (0..data.n()).map(|i| 0.5 + (i as f64 * 0.37).sin()).collect();
                RieszWeights::from_residuals(&data, &res, &spec, 1e-6).unwrap()
            } else {
                RieszWeights::unit(data.n())
            };
            let grad = riesz_loss_gradient(&model, &data, Some(&weights));
            let step = 1e-5;
            for j in 0..12 {
                let mut tp = model.theta();
                tp[j] += step;
                let mut tm = model.theta();
                tm[j] -= step;
                let fp = weighted_riesz_loss(&model.with_theta(&tp), &data, &weights).unwrap();
                let fm = weighted_riesz_loss(&model.with_theta(&tm), &data, &weights).unwrap();
                let fd = (fp - fm) / (2.0 * step);
                let rel = (fd - grad[j]).abs() / grad[j].abs().max(1e-3);
                prop_assert!(rel <= 1e-5, "coord {}: fd {} vs {}", j, fd, grad[j]);
            }
        }
    }
}
