//! Seeded train/test splitting and clean/private partitioning.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::EncodedDataset;
use crate::error::{Error, Result};
use crate::rng;

/// Test-set size for `n` rows: `ceil(n · test_fraction)`.
///
/// Computed with a small tolerance so that exact products such as
/// `10 × 0.3` are not pushed up by floating-point error.
pub fn test_size(n: usize, test_fraction: f64) -> usize {
    ((n as f64 * test_fraction) - 1e-9).ceil().max(0.0) as usize
}

/// Shuffles `0..n` with the run seed and cuts it into `(train, test)` indices.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test_fraction must be in (0,1), got {test_fraction}"
        )));
    }
    let n_test = test_size(n, test_fraction);
    if n_test == 0 || n_test >= n {
        return Err(Error::EmptySplit(format!(
            "{n} rows with test fraction {test_fraction} leave an empty side"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, "split"));
    let test = idx.split_off(n - n_test);
    Ok((idx, test))
}

pub fn split_train_test(
    data: &EncodedDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(EncodedDataset, EncodedDataset)> {
    let (train, test) = split_indices(data.len(), test_fraction, seed)?;
    Ok((data.select(&train), data.select(&test)))
}

/// Disjoint clean and private subsets of the training set.
///
/// Before randomization both subsets carry their true attributes; after
/// [`crate::privacy::privatize`] the private subset's `a` is noised while
/// `a_true` keeps the original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiPrivatePartition {
    pub clean: EncodedDataset,
    pub private: EncodedDataset,
    /// `|clean| / (|clean| + |private|)`.
    pub clean_ratio: f64,
    pub clean_indices: Vec<usize>,
    pub private_indices: Vec<usize>,
}

impl SemiPrivatePartition {
    pub fn total(&self) -> usize {
        self.clean.len() + self.private.len()
    }
}

pub fn clean_size(n: usize, clean_ratio: f64) -> usize {
    (n as f64 * clean_ratio).round() as usize
}

/// Draws `round(clean_ratio · |train|)` clean rows; the rest are private.
pub fn partition_semi_private(
    train: &EncodedDataset,
    clean_ratio: f64,
    seed: u64,
) -> Result<SemiPrivatePartition> {
    if !(clean_ratio > 0.0 && clean_ratio <= 1.0) {
        return Err(Error::invalid(format!(
            "clean_ratio must be in (0,1], got {clean_ratio}"
        )));
    }
    let n = train.len();
    let n_clean = clean_size(n, clean_ratio).min(n);
    if n_clean == 0 {
        return Err(Error::EmptySplit(format!(
            "clean ratio {clean_ratio} of {n} rows rounds to zero clean samples"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, "partition"));
    let private_indices = idx.split_off(n_clean);
    let clean_indices = idx;
    Ok(SemiPrivatePartition {
        clean: train.select(&clean_indices),
        private: train.select(&private_indices),
        clean_ratio: n_clean as f64 / n as f64,
        clean_indices,
        private_indices,
    })
}
