//! Synthetic data-generating processes with exactly computable nuisances,
//! efficiency bounds and brute-force oracles.

mod bounds;
mod brute;
mod quadrature;

use serde::{Deserialize, Serialize};

use crate::data::Arm;
use crate::error::{Error, Result};

pub use bounds::{
    beta_star, bound_v_hahn, bound_v_ipw, bound_v_os, bound_v_tilde_os, bound_v_tilde_ts,
    bound_v_ts, compute_bounds, heterogeneity, true_ate, BetaValue, BoundReport,
};
pub use brute::{brute_force_riesz, CellMinimizer};
pub use quadrature::gauss_hermite;

/// A synthetic DGP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DgpSpec {
    DiscreteX(DiscreteSpec),
    GaussianLinear(GaussianSpec),
}

/// Finite covariate support with tabulated nuisances.
///
/// `pi` is `pi0(1|x)` and makes the DGP usable in the one-sample design;
/// `q_mass` is the unlabeled covariate law and makes it usable in the
/// two-sample design. Outcomes are Gaussian given `(d, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpec {
    pub support: Vec<Vec<f64>>,
    pub p_mass: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_mass: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    pub e: Vec<f64>,
    pub mu1: Vec<f64>,
    pub mu0: Vec<f64>,
    pub sigma2_1: Vec<f64>,
    pub sigma2_0: Vec<f64>,
}

/// Independent Gaussian covariates with linear outcome means and clipped
/// logistic probabilities.
///
/// Coefficient vectors hold an intercept followed by `k` slopes.
/// `pi0(1|x) = pi_scale * clamp(logistic(pi . [1, x]), eps, 1 - eps)` and
/// `e0(1|x) = clamp(logistic(e . [1, x]), eps, 1 - eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub p_mean: Vec<f64>,
    pub p_var: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_var: Option<Vec<f64>>,
    pub mu1: Vec<f64>,
    pub mu0: Vec<f64>,
    pub sigma2_1: f64,
    pub sigma2_0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub pi_scale: f64,
    pub e: Vec<f64>,
    #[serde(default = "default_overlap_eps")]
    pub overlap_eps: f64,
}

fn one() -> f64 {
    1.0
}

fn default_overlap_eps() -> f64 {
    0.01
}

const MASS_TOL: f64 = 1e-9;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn linear(coef: &[f64], x: &[f64]) -> f64 {
    coef[0] + coef[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn normal_log_density(mean: &[f64], var: &[f64], x: &[f64]) -> f64 {
    mean.iter()
        .zip(var)
        .zip(x)
        .map(|((m, v), xi)| -0.5 * ((xi - m).powi(2) / v + (2.0 * std::f64::consts::PI * v).ln()))
        .sum()
}

impl DgpSpec {
    /// Two equiprobable covariate values `x in {0, 1}`, `pi0 = e0 = 0.5`,
    /// `mu0(1, x) = x`, `mu0(0, x) = 0`, unit noise.
    pub fn d1() -> Self {
        DgpSpec::DiscreteX(DiscreteSpec {
            support: vec![vec![0.0], vec![1.0]],
            p_mass: vec![0.5, 0.5],
            q_mass: None,
            pi: Some(vec![0.5, 0.5]),
            e: vec![0.5, 0.5],
            mu1: vec![0.0, 1.0],
            mu0: vec![0.0, 0.0],
            sigma2_1: vec![1.0, 1.0],
            sigma2_0: vec![1.0, 1.0],
        })
    }

    /// The covariate law and outcome model of [`DgpSpec::d1`] as a
    /// two-sample design with `q0 = p0`.
    pub fn d2() -> Self {
        DgpSpec::DiscreteX(DiscreteSpec {
            support: vec![vec![0.0], vec![1.0]],
            p_mass: vec![0.5, 0.5],
            q_mass: Some(vec![0.5, 0.5]),
            pi: None,
            e: vec![0.5, 0.5],
            mu1: vec![0.0, 1.0],
            mu0: vec![0.0, 0.0],
            sigma2_1: vec![1.0, 1.0],
            sigma2_0: vec![1.0, 1.0],
        })
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "d1" => Some(Self::d1()),
            "d2" => Some(Self::d2()),
            _ => None,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            DgpSpec::DiscreteX(s) => s.support.first().map_or(0, Vec::len),
            DgpSpec::GaussianLinear(s) => s.p_mean.len(),
        }
    }

    pub fn is_one_sample(&self) -> bool {
        match self {
            DgpSpec::DiscreteX(s) => s.pi.is_some(),
            DgpSpec::GaussianLinear(s) => s.pi.is_some(),
        }
    }

    pub fn is_two_sample(&self) -> bool {
        match self {
            DgpSpec::DiscreteX(s) => s.q_mass.is_some(),
            DgpSpec::GaussianLinear(s) => s.q_mean.is_some(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DgpSpec::DiscreteX(s) => s.validate(),
            DgpSpec::GaussianLinear(s) => s.validate(),
        }
    }

    pub(crate) fn require_one_sample(&self) -> Result<()> {
        if self.is_one_sample() {
            Ok(())
        } else {
            Err(invalid("one-sample quantities need pi0(1|x) (field `pi`)"))
        }
    }

    pub(crate) fn require_two_sample(&self) -> Result<()> {
        if self.is_two_sample() {
            Ok(())
        } else {
            Err(invalid(
                "two-sample quantities need the unlabeled covariate law (field `q_mass` or `q_mean`/`q_var`)",
            ))
        }
    }

    /// `mu0(d, x)`.
    pub fn mu(&self, arm: Arm, x: &[f64]) -> f64 {
        match self {
            DgpSpec::DiscreteX(s) => {
                let i = s.locate(x);
                match arm {
                    Arm::Treated => s.mu1[i],
                    Arm::Control => s.mu0[i],
                }
            }
            DgpSpec::GaussianLinear(s) => match arm {
                Arm::Treated => linear(&s.mu1, x),
                Arm::Control => linear(&s.mu0, x),
            },
        }
    }

    /// `tau0(x) = mu0(1, x) - mu0(0, x)`.
    pub fn tau_x(&self, x: &[f64]) -> f64 {
        self.mu(Arm::Treated, x) - self.mu(Arm::Control, x)
    }

    pub fn sigma2(&self, arm: Arm, x: &[f64]) -> f64 {
        match self {
            DgpSpec::DiscreteX(s) => {
                let i = s.locate(x);
                match arm {
                    Arm::Treated => s.sigma2_1[i],
                    Arm::Control => s.sigma2_0[i],
                }
            }
            DgpSpec::GaussianLinear(s) => match arm {
                Arm::Treated => s.sigma2_1,
                Arm::Control => s.sigma2_0,
            },
        }
    }

    /// `e0(1 | x)`.
    pub fn e1(&self, x: &[f64]) -> f64 {
        match self {
            DgpSpec::DiscreteX(s) => s.e[s.locate(x)],
            DgpSpec::GaussianLinear(s) => s.clip(logistic(linear(&s.e, x))),
        }
    }

    pub fn e(&self, arm: Arm, x: &[f64]) -> f64 {
        match arm {
            Arm::Treated => self.e1(x),
            Arm::Control => 1.0 - self.e1(x),
        }
    }

    /// `pi0(1 | x)`; one-sample specs only.
    pub fn pi1(&self, x: &[f64]) -> Option<f64> {
        match self {
            DgpSpec::DiscreteX(s) => s.pi.as_ref().map(|pi| pi[s.locate(x)]),
            DgpSpec::GaussianLinear(s) => {
                s.pi.as_ref()
                    .map(|c| s.pi_scale * s.clip(logistic(linear(c, x))))
            }
        }
    }

    /// `g0(d | x) = pi0(1 | x) e0(d | x)`; one-sample specs only.
    pub fn g(&self, arm: Arm, x: &[f64]) -> Option<f64> {
        self.pi1(x).map(|pi| pi * self.e(arm, x))
    }

    /// Density ratio `p0(x) / q0(x)`; two-sample specs only.
    pub fn ratio_pq(&self, x: &[f64]) -> Option<f64> {
        match self {
            DgpSpec::DiscreteX(s) => {
                let q = s.q_mass.as_ref()?;
                let i = s.locate(x);
                Some(s.p_mass[i] / q[i])
            }
            DgpSpec::GaussianLinear(s) => {
                let (qm, qv) = (s.q_mean.as_ref()?, s.q_var.as_ref()?);
                Some(
                    (normal_log_density(&s.p_mean, &s.p_var, x) - normal_log_density(qm, qv, x))
                        .exp(),
                )
            }
        }
    }

    /// Same spec with `pi0` multiplied by `c`.
    pub fn with_pi_scaled(&self, c: f64) -> Result<Self> {
        self.require_one_sample()?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("pi scale {c} must be positive")));
        }
        let mut out = self.clone();
        match &mut out {
            DgpSpec::DiscreteX(s) => {
                for v in s.pi.as_mut().expect("checked above") {
                    *v *= c;
                }
            }
            DgpSpec::GaussianLinear(s) => s.pi_scale *= c,
        }
        out.validate()?;
        Ok(out)
    }

    /// Copy with `pi0 == 1`, i.e. the fully labeled design.
    pub fn fully_labeled(&self) -> Self {
        let mut out = self.clone();
        match &mut out {
            DgpSpec::DiscreteX(s) => s.pi = Some(vec![1.0; s.support.len()]),
            DgpSpec::GaussianLinear(s) => {
                // a huge intercept saturates the clipped logistic; the scale
                // then lifts 1 - eps to exactly one
                let mut c = vec![0.0; s.p_mean.len() + 1];
                c[0] = 800.0;
                s.pi = Some(c);
                s.pi_scale = 1.0 / (1.0 - s.overlap_eps);
            }
        }
        out
    }

    /// `E_{p0}[f(X)]`.
    pub fn expect_p(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        match self {
            DgpSpec::DiscreteX(s) => s.expect(&s.p_mass, f),
            DgpSpec::GaussianLinear(s) => quadrature::expect_normal(&s.p_mean, &s.p_var, f),
        }
    }

    /// `E_{q0}[f(X)]`; two-sample specs only.
    pub fn expect_q(&self, f: impl Fn(&[f64]) -> f64) -> Option<f64> {
        match self {
            DgpSpec::DiscreteX(s) => s.q_mass.as_ref().map(|q| s.expect(q, f)),
            DgpSpec::GaussianLinear(s) => Some(quadrature::expect_normal(
                s.q_mean.as_ref()?,
                s.q_var.as_ref()?,
                f,
            )),
        }
    }
}

impl DiscreteSpec {
    /// Index of the support point equal to `x`, or the nearest one.
    pub fn locate(&self, x: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, s) in self.support.iter().enumerate() {
            let d: f64 = s.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
            if d == 0.0 {
                return i;
            }
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn expect(&self, mass: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
        self.support
            .iter()
            .zip(mass)
            .filter(|(_, &w)| w > 0.0)
            .map(|(x, &w)| w * f(x))
            .sum()
    }

    fn validate(&self) -> Result<()> {
        let n = self.support.len();
        if n == 0 {
            return Err(invalid("support is empty"));
        }
        let k = self.support[0].len();
        if k == 0 {
            return Err(invalid("support points need at least one covariate"));
        }
        for (i, x) in self.support.iter().enumerate() {
            if x.len() != k {
                return Err(invalid(format!(
                    "support point {} has {} covariates, expected {k}",
                    i + 1,
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("support point {} is not finite", i + 1)));
            }
        }
        let tables: [(&str, Option<&Vec<f64>>); 8] = [
            ("p_mass", Some(&self.p_mass)),
            ("q_mass", self.q_mass.as_ref()),
            ("pi", self.pi.as_ref()),
            ("e", Some(&self.e)),
            ("mu1", Some(&self.mu1)),
            ("mu0", Some(&self.mu0)),
            ("sigma2_1", Some(&self.sigma2_1)),
            ("sigma2_0", Some(&self.sigma2_0)),
        ];
        for (name, t) in tables {
            if let Some(t) = t {
                if t.len() != n {
                    return Err(invalid(format!(
                        "{name} has {} entries, support has {n}",
                        t.len()
                    )));
                }
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(invalid(format!("{name} has a non-finite entry")));
                }
            }
        }
        check_mass("p_mass", &self.p_mass)?;
        if let Some(q) = &self.q_mass {
            check_mass("q_mass", q)?;
            if let Some(i) = (0..n).find(|&i| q[i] > 0.0 && self.p_mass[i] <= 0.0) {
                return Err(invalid(format!(
                    "common support violated: q0 > 0 but p0 = 0 at support point {}",
                    i + 1
                )));
            }
        }
        if let Some(i) = self.e.iter().position(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(invalid(format!(
                "common support violated: e0(1|x) = {} at support point {} (need 0 < e0 < 1)",
                self.e[i],
                i + 1
            )));
        }
        if let Some(pi) = &self.pi {
            if let Some(i) = pi.iter().position(|&p| !(p > 0.0 && p <= 1.0)) {
                return Err(invalid(format!(
                    "common support violated: pi0(1|x) = {} at support point {} (need 0 < pi0 <= 1)",
                    pi[i],
                    i + 1
                )));
            }
        }
        for (name, t) in [("sigma2_1", &self.sigma2_1), ("sigma2_0", &self.sigma2_0)] {
            if t.iter().any(|&v| v < 0.0) {
                return Err(invalid(format!("{name} must be nonnegative")));
            }
        }
        Ok(())
    }
}

fn check_mass(name: &str, mass: &[f64]) -> Result<()> {
    if mass.iter().any(|&m| m < 0.0) {
        return Err(invalid(format!("{name} has a negative entry")));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(invalid(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

impl GaussianSpec {
    fn clip(&self, p: f64) -> f64 {
        p.clamp(self.overlap_eps, 1.0 - self.overlap_eps)
    }

    fn validate(&self) -> Result<()> {
        let k = self.p_mean.len();
        if !(1..=3).contains(&k) {
            return Err(invalid(format!(
                "gaussian_linear supports 1 to 3 covariates, got {k}"
            )));
        }
        let mut vecs: Vec<(&str, &Vec<f64>, usize)> = vec![
            ("p_var", &self.p_var, k),
            ("mu1", &self.mu1, k + 1),
            ("mu0", &self.mu0, k + 1),
            ("e", &self.e, k + 1),
        ];
        match (&self.q_mean, &self.q_var) {
            (Some(m), Some(v)) => {
                vecs.push(("q_mean", m, k));
                vecs.push(("q_var", v, k));
            }
            (None, None) => {}
            _ => return Err(invalid("q_mean and q_var must be given together")),
        }
        if let Some(pi) = &self.pi {
            vecs.push(("pi", pi, k + 1));
        }
        for (name, v, len) in vecs {
            if v.len() != len {
                return Err(invalid(format!(
                    "{name} has {} entries, expected {len}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("{name} has a non-finite entry")));
            }
        }
        if self.p_mean.iter().any(|x| !x.is_finite()) {
            return Err(invalid("p_mean has a non-finite entry"));
        }
        let vars = self.p_var.iter().chain(self.q_var.iter().flatten());
        if vars.into_iter().any(|&v| !(v > 0.0)) {
            return Err(invalid("covariate variances must be positive"));
        }
        if !(self.overlap_eps > 0.0 && self.overlap_eps < 0.5) {
            return Err(invalid(
                "common support violated: overlap_eps must lie in (0, 1/2) so that e0 and pi0 stay inside (0, 1)",
            ));
        }
        if !(self.pi_scale > 0.0 && self.pi_scale * (1.0 - self.overlap_eps) <= 1.0 + 1e-12) {
            return Err(invalid("pi_scale must keep pi0 inside (0, 1]"));
        }
        if !(self.sigma2_1 >= 0.0 && self.sigma2_0 >= 0.0) {
            return Err(invalid("outcome variances must be nonnegative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        DgpSpec::d1().validate().unwrap();
        DgpSpec::d2().validate().unwrap();
        assert!(DgpSpec::d1().is_one_sample() && !DgpSpec::d1().is_two_sample());
        assert!(DgpSpec::d2().is_two_sample() && !DgpSpec::d2().is_one_sample());
        assert_eq!(DgpSpec::d1().g(Arm::Treated, &[1.0]), Some(0.25));
    }

    #[test]
    fn zero_propensity_cites_common_support() {
        let mut s = DgpSpec::d1();
        if let DgpSpec::DiscreteX(d) = &mut s {
            d.e[1] = 0.0;
        }
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("common support"), "{err}");
    }

    #[test]
    fn masses_must_sum_to_one() {
        let mut s = DgpSpec::d1();
        if let DgpSpec::DiscreteX(d) = &mut s {
            d.p_mass = vec![0.5, 0.6];
        }
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = DgpSpec::d2();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"family\":\"discrete_x\""));
        let back: DgpSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn pi_scaling() {
        let s = DgpSpec::d1().with_pi_scaled(0.1).unwrap();
        assert!((s.pi1(&[0.0]).unwrap() - 0.05).abs() < 1e-15);
        assert!(DgpSpec::d1().with_pi_scaled(3.0).is_err());
        assert!(DgpSpec::d2().with_pi_scaled(0.5).is_err());
    }

    #[test]
    fn gaussian_pointwise() {
        let s = DgpSpec::GaussianLinear(GaussianSpec {
            p_mean: vec![0.0],
            p_var: vec![1.0],
            q_mean: Some(vec![0.5]),
            q_var: Some(vec![2.0]),
            mu1: vec![1.0, 2.0],
            mu0: vec![0.0, 1.0],
            sigma2_1: 1.0,
            sigma2_0: 1.0,
            pi: Some(vec![0.0, 0.0]),
            pi_scale: 1.0,
            e: vec![0.0, 100.0],
            overlap_eps: 0.05,
        });
        s.validate().unwrap();
        assert_eq!(s.tau_x(&[2.0]), 3.0);
        assert_eq!(s.e1(&[10.0]), 0.95);
        assert_eq!(s.pi1(&[3.0]), Some(0.5));
        // N(0,1) / N(0.5,2) at 0.5
        let expect = (-0.125f64).exp() / (1.0 / 2f64.sqrt());
        assert!((s.ratio_pq(&[0.5]).unwrap() - expect).abs() < 1e-14);
        let full = s.fully_labeled();
        assert!((full.pi1(&[-4.0]).unwrap() - 1.0).abs() < 1e-15);
    }
}
