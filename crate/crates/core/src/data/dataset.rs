use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Numeric features, binary labels and binary sensitive attributes.
///
/// `a` is the attribute as observed (possibly randomized); `a_true` keeps the
/// ground truth for evaluation. Training code only sees [`LabeledView`], which
/// has no access to `a_true`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDataset {
    pub x: Matrix,
    pub y: Vec<u8>,
    pub a: Vec<u8>,
    pub a_true: Option<Vec<u8>>,
}

/// The part of a dataset a trainer may read.
#[derive(Debug, Clone, Copy)]
pub struct LabeledView<'a> {
    pub x: &'a Matrix,
    pub y: &'a [u8],
    pub a: &'a [u8],
}

impl LabeledView<'_> {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

fn check_binary(name: &str, v: &[u8]) -> Result<()> {
    match v.iter().find(|&&b| b > 1) {
        Some(b) => Err(Error::invalid(format!(
            "{name} contains non-binary value {b}"
        ))),
        None => Ok(()),
    }
}

impl EncodedDataset {
    pub fn new(x: Matrix, y: Vec<u8>, a: Vec<u8>, a_true: Option<Vec<u8>>) -> Result<Self> {
        let n = x.rows();
        if y.len() != n || a.len() != n || a_true.as_ref().is_some_and(|t| t.len() != n) {
            return Err(Error::shape(format!(
                "row counts differ: x {n}, y {}, a {}",
                y.len(),
                a.len()
            )));
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        check_binary("y", &y)?;
        check_binary("a", &a)?;
        if let Some(t) = &a_true {
            check_binary("a_true", t)?;
        }
        Ok(Self { x, y, a, a_true })
    }

    /// Attributes observed without noise: `a_true` is a copy of `a`.
    pub fn with_clean_attributes(x: Matrix, y: Vec<u8>, a: Vec<u8>) -> Result<Self> {
        let t = a.clone();
        Self::new(x, y, a, Some(t))
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.x.cols()
    }

    pub fn view(&self) -> LabeledView<'_> {
        LabeledView {
            x: &self.x,
            y: &self.y,
            a: &self.a,
        }
    }

    /// Ground-truth attributes, or an error when they were not retained.
    pub fn ground_truth(&self) -> Result<&[u8]> {
        self.a_true
            .as_deref()
            .ok_or_else(|| Error::invalid("dataset carries no ground-truth attributes"))
    }

    pub fn select(&self, indices: &[usize]) -> EncodedDataset {
        let pick = |v: &[u8]| indices.iter().map(|&i| v[i]).collect::<Vec<u8>>();
        EncodedDataset {
            x: self.x.select_rows(indices),
            y: pick(&self.y),
            a: pick(&self.a),
            a_true: self.a_true.as_deref().map(pick),
        }
    }

    /// Same rows with the observed attribute replaced.
    pub fn with_observed_attributes(&self, a: Vec<u8>) -> Result<EncodedDataset> {
        EncodedDataset::new(self.x.clone(), self.y.clone(), a, self.a_true.clone())
    }

    /// Row-wise concatenation.
    pub fn concat(parts: &[&EncodedDataset]) -> Result<EncodedDataset> {
        let xs: Vec<&Matrix> = parts.iter().map(|d| &d.x).collect();
        let x = Matrix::vstack(&xs)?;
        let y = parts.iter().flat_map(|d| d.y.iter().copied()).collect();
        let a = parts.iter().flat_map(|d| d.a.iter().copied()).collect();
        let a_true = if parts.iter().all(|d| d.a_true.is_some()) {
            Some(
                parts
                    .iter()
                    .flat_map(|d| d.a_true.clone().unwrap_or_default())
                    .collect(),
            )
        } else {
            None
        };
        EncodedDataset::new(x, y, a, a_true)
    }

    /// Features with the observed attribute appended as a last column.
    pub fn features_with_attribute(&self) -> Result<Matrix> {
        let col: Vec<f64> = self.a.iter().map(|&v| f64::from(v)).collect();
        self.x.with_column(&col)
    }
}
