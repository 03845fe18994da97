//! Dataset containers for the one-sample (censoring) and two-sample
//! (case-control) designs.
//!
//! Missing treatment and outcome values are explicit `None`s; they are never
//! encoded as NaN. Validation enforces the coupling between the observation
//! indicator and the presence of `(d, y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Treated,
    Control,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Treated, Arm::Control];

    pub fn from_indicator(d: u8) -> Option<Arm> {
        match d {
            1 => Some(Arm::Treated),
            0 => Some(Arm::Control),
            _ => None,
        }
    }

    pub fn indicator(self) -> u8 {
        match self {
            Arm::Treated => 1,
            Arm::Control => 0,
        }
    }

    /// +1 for the treated arm, -1 for control.
    pub fn sign(self) -> f64 {
        match self {
            Arm::Treated => 1.0,
            Arm::Control => -1.0,
        }
    }
}

/// One row of the censoring design: `(X, O, D~, Y~)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneSampleRow {
    pub x: Vec<f64>,
    pub observed: bool,
    pub d: Option<Arm>,
    pub y: Option<f64>,
}

impl OneSampleRow {
    pub fn labeled(x: Vec<f64>, d: Arm, y: f64) -> Self {
        Self {
            x,
            observed: true,
            d: Some(d),
            y: Some(y),
        }
    }

    pub fn unlabeled(x: Vec<f64>) -> Self {
        Self {
            x,
            observed: false,
            d: None,
            y: None,
        }
    }

    /// `(arm, outcome)` for observed rows. Only meaningful on validated rows.
    pub fn label(&self) -> Option<(Arm, f64)> {
        match (self.observed, self.d, self.y) {
            (true, Some(d), Some(y)) => Some((d, y)),
            _ => None,
        }
    }
}

/// A fully observed `(X, D, Y)` triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub x: Vec<f64>,
    pub d: Arm,
    pub y: f64,
}

/// Validated one-sample dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct OneSampleDataset {
    rows: Vec<OneSampleRow>,
    k: usize,
    n_labeled: usize,
}

impl OneSampleDataset {
    pub fn rows(&self) -> &[OneSampleRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<OneSampleRow> {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn n_labeled(&self) -> usize {
        self.n_labeled
    }

    pub fn n_unlabeled(&self) -> usize {
        self.rows.len() - self.n_labeled
    }

    /// Labeled rows as `(X, D, Y)` triples, in dataset order.
    pub fn labeled_rows(&self) -> Vec<LabeledRow> {
        self.rows
            .iter()
            .filter_map(|r| {
                r.label().map(|(d, y)| LabeledRow {
                    x: r.x.clone(),
                    d,
                    y,
                })
            })
            .collect()
    }

    /// Sub-dataset over the given row indices (order preserved). The caller
    /// guarantees the indices are in range and nonempty.
    pub fn subset(&self, indices: &[usize]) -> OneSampleDataset {
        let rows: Vec<OneSampleRow> = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let n_labeled = rows.iter().filter(|r| r.observed).count();
        OneSampleDataset {
            rows,
            k: self.k,
            n_labeled,
        }
    }
}

/// Validated two-sample dataset: labeled `(X, D, Y)` plus unlabeled `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSampleDataset {
    labeled: Vec<LabeledRow>,
    unlabeled: Vec<Vec<f64>>,
    k: usize,
}

impl TwoSampleDataset {
    pub fn labeled(&self) -> &[LabeledRow] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[Vec<f64>] {
        &self.unlabeled
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.labeled.len()
    }

    pub fn l(&self) -> usize {
        self.unlabeled.len()
    }

    /// Labeled fraction `m / (m + l)`.
    pub fn labeled_fraction(&self) -> f64 {
        self.m() as f64 / (self.m() + self.l()) as f64
    }
}

fn check_x(row: usize, x: &[f64], k: usize) -> Result<()> {
    if x.len() != k {
        return Err(Error::DimMismatch {
            row,
            expected: k,
            found: x.len(),
        });
    }
    if let Some(j) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue {
            row,
            field: format!("x{}", j + 1),
        });
    }
    Ok(())
}

/// Validate one-sample rows. Row numbers in errors are 1-based.
pub fn validate_one_sample(rows: Vec<OneSampleRow>) -> Result<OneSampleDataset> {
    let k = match rows.first() {
        Some(r) => r.x.len(),
        None => return Err(Error::EmptyDataset("no rows".into())),
    };
    if k == 0 {
        return Err(Error::DimMismatch {
            row: 1,
            expected: 1,
            found: 0,
        });
    }
    let mut n_labeled = 0;
    for (i, r) in rows.iter().enumerate() {
        let row = i + 1;
        check_x(row, &r.x, k)?;
        match (r.observed, r.d.is_some(), r.y) {
            (true, true, Some(y)) => {
                if !y.is_finite() {
                    return Err(Error::NonFiniteValue {
                        row,
                        field: "y".into(),
                    });
                }
                n_labeled += 1;
            }
            (false, false, None) => {}
            (true, _, _) => {
                return Err(Error::NaCouplingViolation {
                    row,
                    detail: "o=1 requires both d and y to be present".into(),
                })
            }
            (false, _, _) => {
                return Err(Error::NaCouplingViolation {
                    row,
                    detail: "o=0 requires d and y to be NA".into(),
                })
            }
        }
    }
    Ok(OneSampleDataset { rows, k, n_labeled })
}

/// Validate a two-sample dataset. Labeled rows are numbered first, unlabeled
/// rows continue the numbering in errors after an `m` offset.
pub fn validate_two_sample(
    labeled: Vec<LabeledRow>,
    unlabeled: Vec<Vec<f64>>,
) -> Result<TwoSampleDataset> {
    if labeled.is_empty() {
        return Err(Error::EmptyDataset("labeled sample is empty".into()));
    }
    if unlabeled.is_empty() {
        return Err(Error::EmptyDataset("unlabeled sample is empty".into()));
    }
    let k = labeled[0].x.len();
    if k == 0 {
        return Err(Error::DimMismatch {
            row: 1,
            expected: 1,
            found: 0,
        });
    }
    for (i, r) in labeled.iter().enumerate() {
        check_x(i + 1, &r.x, k)?;
        if !r.y.is_finite() {
            return Err(Error::NonFiniteValue {
                row: i + 1,
                field: "y".into(),
            });
        }
    }
    let m = labeled.len();
    for (i, z) in unlabeled.iter().enumerate() {
        check_x(m + i + 1, z, k)?;
    }
    Ok(TwoSampleDataset {
        labeled,
        unlabeled,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sample_counts() {
        let ds = validate_one_sample(vec![
            OneSampleRow::labeled(vec![0.0], Arm::Treated, 2.0),
            OneSampleRow::unlabeled(vec![1.0]),
        ])
        .unwrap();
        assert_eq!((ds.n(), ds.n_labeled(), ds.n_unlabeled()), (2, 1, 1));
    }

    #[test]
    fn unobserved_row_with_treatment_is_rejected() {
        let row = OneSampleRow {
            x: vec![0.0],
            observed: false,
            d: Some(Arm::Treated),
            y: None,
        };
        assert!(matches!(
            validate_one_sample(vec![row]),
            Err(Error::NaCouplingViolation { row: 1, .. })
        ));
    }

    #[test]
    fn observed_row_missing_outcome_is_rejected() {
        let row = OneSampleRow {
            x: vec![0.0],
            observed: true,
            d: Some(Arm::Control),
            y: None,
        };
        assert!(matches!(
            validate_one_sample(vec![row]),
            Err(Error::NaCouplingViolation { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let err = validate_one_sample(vec![
            OneSampleRow::labeled(vec![0.0, 1.0], Arm::Control, 1.0),
            OneSampleRow::unlabeled(vec![3.0]),
        ])
        .unwrap_err();
        assert_eq!(
            err,
            Error::DimMismatch {
                row: 2,
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn nonfinite_covariate() {
        let err = validate_one_sample(vec![OneSampleRow::unlabeled(vec![f64::INFINITY])]);
        assert!(matches!(err, Err(Error::NonFiniteValue { .. })));
        assert!(matches!(
            validate_one_sample(vec![]),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn validation_is_idempotent() {
        let ds = validate_one_sample(vec![
            OneSampleRow::labeled(vec![0.5], Arm::Treated, 2.0),
            OneSampleRow::labeled(vec![1.5], Arm::Control, -1.0),
            OneSampleRow::unlabeled(vec![1.0]),
        ])
        .unwrap();
        let again = validate_one_sample(ds.rows().to_vec()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn two_sample_shapes_and_errors() {
        let lab = vec![LabeledRow {
            x: vec![0.0],
            d: Arm::Treated,
            y: 1.0,
        }];
        let ds = validate_two_sample(lab.clone(), vec![vec![1.0], vec![2.0]]).unwrap();
        assert_eq!((ds.m(), ds.l(), ds.k()), (1, 2, 1));

        assert!(matches!(
            validate_two_sample(vec![], vec![vec![1.0]]),
            Err(Error::EmptyDataset(_))
        ));
        let bad = vec![LabeledRow {
            x: vec![0.0],
            d: Arm::Treated,
            y: f64::NAN,
        }];
        assert!(matches!(
            validate_two_sample(bad, vec![vec![1.0]]),
            Err(Error::NonFiniteValue { .. })
        ));
        assert!(matches!(
            validate_two_sample(lab, vec![vec![1.0, 2.0]]),
            Err(Error::DimMismatch { row: 2, .. })
        ));
    }
}
