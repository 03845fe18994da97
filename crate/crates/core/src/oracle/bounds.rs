//! Exact efficiency bounds on synthetic DGPs.

use serde::{Deserialize, Serialize};

use super::DgpSpec;
use crate::data::Arm;
use crate::error::{Error, Result};

/// `tau0 = E_kappa[tau0(X)]` with `kappa = beta p0 + (1 - beta) q0`.
/// Specs without an unlabeled law use `q0 = p0`.
pub fn true_ate(dgp: &DgpSpec, beta: f64) -> f64 {
    let on_p = dgp.expect_p(|x| dgp.tau_x(x));
    if beta == 1.0 {
        return on_p;
    }
    let on_q = dgp.expect_q(|x| dgp.tau_x(x)).unwrap_or(on_p);
    beta * on_p + (1.0 - beta) * on_q
}

/// `E_{p0}[(tau0(X) - center)^2]`.
pub fn heterogeneity(dgp: &DgpSpec, center: f64) -> f64 {
    dgp.expect_p(|x| (dgp.tau_x(x) - center).powi(2))
}

fn g_term(dgp: &DgpSpec, x: &[f64]) -> f64 {
    let g1 = dgp.g(Arm::Treated, x).expect("one-sample spec");
    let g0 = dgp.g(Arm::Control, x).expect("one-sample spec");
    dgp.sigma2(Arm::Treated, x) / g1 + dgp.sigma2(Arm::Control, x) / g0
}

fn e_term(dgp: &DgpSpec, x: &[f64]) -> f64 {
    dgp.sigma2(Arm::Treated, x) / dgp.e1(x) + dgp.sigma2(Arm::Control, x) / (1.0 - dgp.e1(x))
}

/// `E_{p0}[sigma^2(1,X)/g0(1|X) + sigma^2(0,X)/g0(0|X)]`, the bound with an
/// unlimited unlabeled sample.
pub fn bound_v_tilde_os(dgp: &DgpSpec) -> Result<f64> {
    dgp.validate()?;
    dgp.require_one_sample()?;
    Ok(dgp.expect_p(|x| g_term(dgp, x)))
}

/// One-sample efficiency bound.
pub fn bound_v_os(dgp: &DgpSpec) -> Result<f64> {
    let tilde = bound_v_tilde_os(dgp)?;
    Ok(tilde + heterogeneity(dgp, true_ate(dgp, 1.0)))
}

/// `E_{p0}[E[Y(1)^2|X]/g0(1|X) + E[Y(0)^2|X]/g0(0|X)]`.
///
/// This is the second moment of the IPW summand; its variance is smaller by
/// `tau0^2`.
pub fn bound_v_ipw(dgp: &DgpSpec) -> Result<f64> {
    dgp.validate()?;
    dgp.require_one_sample()?;
    Ok(dgp.expect_p(|x| {
        let m1 = dgp.sigma2(Arm::Treated, x) + dgp.mu(Arm::Treated, x).powi(2);
        let m0 = dgp.sigma2(Arm::Control, x) + dgp.mu(Arm::Control, x).powi(2);
        m1 / dgp.g(Arm::Treated, x).unwrap() + m0 / dgp.g(Arm::Control, x).unwrap()
    }))
}

/// Bound for the fully labeled design (`pi0 == 1`).
pub fn bound_v_hahn(dgp: &DgpSpec) -> Result<f64> {
    dgp.validate()?;
    Ok(dgp.expect_p(|x| e_term(dgp, x)) + heterogeneity(dgp, true_ate(dgp, 1.0)))
}

/// Moments shared by every `beta` in the two-sample bound.
struct TsParts {
    /// `E_p[h]`, `E_q[h]`, `E_q[h q/p]` for `h = sigma^2(1)/e + sigma^2(0)/(1-e)`.
    a: f64,
    b: f64,
    c: f64,
    /// First and second moments of `tau0(X)` under `p0` and `q0`.
    m1p: f64,
    m2p: f64,
    m1q: f64,
    m2q: f64,
}

impl TsParts {
    fn new(dgp: &DgpSpec) -> Result<Self> {
        dgp.validate()?;
        dgp.require_two_sample()?;
        let q = |f: &dyn Fn(&[f64]) -> f64| dgp.expect_q(f).expect("two-sample spec");
        Ok(Self {
            a: dgp.expect_p(|x| e_term(dgp, x)),
            b: q(&|x| e_term(dgp, x)),
            c: q(&|x| e_term(dgp, x) / dgp.ratio_pq(x).unwrap()),
            m1p: dgp.expect_p(|x| dgp.tau_x(x)),
            m2p: dgp.expect_p(|x| dgp.tau_x(x).powi(2)),
            m1q: q(&|x| dgp.tau_x(x)),
            m2q: q(&|x| dgp.tau_x(x).powi(2)),
        })
    }

    /// `E_p[h (kappa/p)^2]` with `kappa/p = beta + (1 - beta) q/p`, expanded
    /// so each piece is integrated against its own law.
    fn tilde(&self, beta: f64) -> f64 {
        let nb = 1.0 - beta;
        let mut v = beta * beta * self.a;
        if beta != 0.0 && nb != 0.0 {
            v += 2.0 * beta * nb * self.b;
        }
        if nb != 0.0 {
            v += nb * nb * self.c;
        }
        v
    }

    fn tau(&self, beta: f64) -> f64 {
        beta * self.m1p + (1.0 - beta) * self.m1q
    }

    fn het_p(&self, center: f64) -> f64 {
        (self.m2p - 2.0 * center * self.m1p + center * center).max(0.0)
    }

    fn het_q(&self, center: f64) -> f64 {
        (self.m2q - 2.0 * center * self.m1q + center * center).max(0.0)
    }

    fn v(&self, beta: f64, alpha: f64) -> f64 {
        let t = self.tau(beta);
        self.tilde(beta) / alpha
            + beta * beta / alpha * self.het_p(t)
            + (1.0 - beta).powi(2) / (1.0 - alpha) * self.het_q(t)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::BadAlpha(alpha))
    }
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

/// Two-sample efficiency bound at mixture weight `beta` and labeled
/// fraction `alpha = m / (m + l)`. Both heterogeneity terms are centered at
/// `tau0` under `kappa_beta`.
pub fn bound_v_ts(dgp: &DgpSpec, beta: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    Ok(TsParts::new(dgp)?.v(beta, alpha))
}

/// `E_{p0}[(sigma^2(1,X)/e0(1|X) + sigma^2(0,X)/e0(0|X)) (kappa_beta/p0)^2]`.
pub fn bound_v_tilde_ts(dgp: &DgpSpec, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(TsParts::new(dgp)?.tilde(beta))
}

fn beta_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "grid step {step} must lie in (0, 1]"
        )));
    }
    let n = (1.0 / step - 1e-9).ceil() as usize;
    Ok((0..=n).map(|i| (i as f64 * step).min(1.0)).collect())
}

fn argmin(parts: &TsParts, alpha: f64, grid: &[f64]) -> (f64, f64) {
    let mut best = (grid[0], parts.v(grid[0], alpha));
    for &b in &grid[1..] {
        let v = parts.v(b, alpha);
        if v < best.1 - 1e-12 * best.1.abs() {
            best = (b, v);
        }
    }
    best
}

/// Grid minimizer of `bound_v_ts(dgp, ., alpha)` over `[0, 1]`; ties go to
/// the smaller `beta`.
pub fn beta_star(dgp: &DgpSpec, alpha: f64, grid_step: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let grid = beta_grid(grid_step)?;
    Ok(argmin(&TsParts::new(dgp)?, alpha, &grid).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaValue {
    pub beta: f64,
    pub v: f64,
}

/// Every bound applicable to a spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// At `beta_star` for two-sample specs, under `p0` otherwise.
    pub tau0: f64,
    pub v_os: Option<f64>,
    pub v_tilde_os: Option<f64>,
    pub v_ipw: Option<f64>,
    pub v_hahn: f64,
    /// `E_{p0}[(tau0(X) - tau0)^2]` centered at the `p0` mean.
    pub heterogeneity: f64,
    pub alpha: Option<f64>,
    pub beta_star: Option<f64>,
    pub v_ts_at_beta_star: Option<f64>,
    pub v_tilde_ts: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub v_ts: Vec<BetaValue>,
}

pub fn compute_bounds(dgp: &DgpSpec, alpha: f64, grid_step: f64) -> Result<BoundReport> {
    dgp.validate()?;
    let tau_p = true_ate(dgp, 1.0);
    let mut report = BoundReport {
        tau0: tau_p,
        v_os: None,
        v_tilde_os: None,
        v_ipw: None,
        v_hahn: bound_v_hahn(dgp)?,
        heterogeneity: heterogeneity(dgp, tau_p),
        alpha: None,
        beta_star: None,
        v_ts_at_beta_star: None,
        v_tilde_ts: None,
        v_ts: Vec::new(),
    };
    if dgp.is_one_sample() {
        report.v_os = Some(bound_v_os(dgp)?);
        report.v_tilde_os = Some(bound_v_tilde_os(dgp)?);
        report.v_ipw = Some(bound_v_ipw(dgp)?);
    }
    if dgp.is_two_sample() {
        check_alpha(alpha)?;
        let parts = TsParts::new(dgp)?;
        let grid = beta_grid(grid_step)?;
        let (b, v) = argmin(&parts, alpha, &grid);
        report.tau0 = parts.tau(b);
        report.alpha = Some(alpha);
        report.beta_star = Some(b);
        report.v_ts_at_beta_star = Some(v);
        report.v_tilde_ts = Some(parts.tilde(b));
        report.v_ts = grid
            .iter()
            .map(|&beta| BetaValue {
                beta,
                v: parts.v(beta, alpha),
            })
            .collect();
    }
    Ok(report)
}
