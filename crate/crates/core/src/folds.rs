//! Cross-fitting partitions.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

/// Random partition of `0..n` into `L` folds whose sizes differ by at most one.
///
/// Built by a seeded Fisher-Yates shuffle followed by round-robin slicing, so
/// `(n, L, seed)` fully determines the assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    n: usize,
    folds: usize,
    seed: u64,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn new(n: usize, folds: usize, seed: u64) -> Result<Self> {
        Self::with_stream(n, folds, seed, stream::FOLDS)
    }

    pub(crate) fn with_stream(n: usize, folds: usize, seed: u64, stream_id: u64) -> Result<Self> {
        if folds < 2 || folds > n {
            return Err(Error::BadFoldCount { n, folds });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream_rng(seed, stream_id));
        let mut assignment = vec![0; n];
        for (pos, &idx) in order.iter().enumerate() {
            assignment[idx] = pos % folds;
        }
        Ok(Self {
            n,
            folds,
            seed,
            assignment,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Zero-based fold index of every sample.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Held-out indices of fold `b` (ascending).
    pub fn held_out(&self, b: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] == b).collect()
    }

    /// Training indices for fold `b`, i.e. the complement of `held_out(b)`.
    pub fn training(&self, b: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] != b).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &b in &self.assignment {
            sizes[b] += 1;
        }
        sizes
    }
}

/// Convenience wrapper matching the `make_fold_plan(n, L, seed)` contract.
pub fn make_fold_plan(n: usize, folds: usize, seed: u64) -> Result<FoldPlan> {
    FoldPlan::new(n, folds, seed)
}
