//! Exhaustive grid minimization of the population Riesz objective.

use serde::{Deserialize, Serialize};

use super::DgpSpec;
use crate::data::Arm;
use crate::error::{Error, Result};
use crate::nuisance::BregmanGenerator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMinimizer {
    pub x: Vec<f64>,
    pub a1: f64,
    pub a0: f64,
}

/// Minimize, cell by cell, the population Bregman objective
/// `g(d|x) (f'(a) a - f(a)) - sign(d) f'(a)` over the grid
/// `lo, lo + step, ..., hi` for both arms.
///
/// Under UKL each arm is searched only on its own half-line (`a1 > 1`,
/// `a0 < -1`). A minimizer on either end of the grid is reported as
/// [`Error::GridExcludesMinimum`].
pub fn brute_force_riesz(
    dgp: &DgpSpec,
    generator: BregmanGenerator,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<Vec<CellMinimizer>> {
    let DgpSpec::DiscreteX(spec) = dgp else {
        return Err(Error::InvalidSpec(
            "brute-force Riesz oracle needs a discrete_x spec".into(),
        ));
    };
    dgp.validate()?;
    dgp.require_one_sample()?;
    if !(lo < hi && step > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "bad grid [{lo}, {hi}] step {step}"
        )));
    }
    let n = ((hi - lo) / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    let cell = |g: f64, sign: f64| -> Result<f64> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &a) in grid.iter().enumerate() {
            // UKL representers live on the half-line of their arm's sign
            let wrong_side = generator == BregmanGenerator::Ukl && a * sign <= 0.0;
            if !generator.in_domain(a) || wrong_side {
                continue;
            }
            let (f, df) = (generator.f(a), generator.df(a));
            let v = g * (df * a - f) - sign * df;
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, _)) if i != 0 && i != n => Ok(grid[i]),
            Some((i, _)) => Err(Error::GridExcludesMinimum {
                lo,
                hi,
                at: grid[i],
            }),
            None => Err(Error::GridExcludesMinimum {
                lo,
                hi,
                at: f64::NAN,
            }),
        }
    };
    spec.support
        .iter()
        .map(|x| {
            let g1 = dgp.g(Arm::Treated, x).expect("one-sample spec");
            let g0 = dgp.g(Arm::Control, x).expect("one-sample spec");
            Ok(CellMinimizer {
                x: x.clone(),
                a1: cell(g1, 1.0)?,
                a0: cell(g0, -1.0)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_inverse_probabilities() {
        for gen in [BregmanGenerator::Lsif, BregmanGenerator::Ukl] {
            let cells = brute_force_riesz(&DgpSpec::d1(), gen, -8.0, 8.0, 0.01).unwrap();
            assert_eq!(cells.len(), 2);
            for c in cells {
                assert_eq!(format!("{:.2} {:.2}", c.a1, c.a0), "4.00 -4.00");
                assert!((c.a1 - 4.0).abs() < 1e-9 && (c.a0 + 4.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let err = brute_force_riesz(&DgpSpec::d1(), BregmanGenerator::Lsif, 0.0, 2.0, 0.01);
        assert!(matches!(err, Err(Error::GridExcludesMinimum { .. })));
        let err = brute_force_riesz(&DgpSpec::d2(), BregmanGenerator::Lsif, -8.0, 8.0, 0.01);
        assert!(err.is_err());
    }
}
