//! Classification and group-fairness metrics.
//!
//! Undefined cases (a group with no members, no positives in a group) are
//! errors rather than zeros, since a silent zero reads as perfect fairness.

use serde::{Deserialize, Serialize};

use crate::data::EncodedDataset;
use crate::debias::{best_response_value, BestResponseConfig, FairSpModel};
use crate::error::{Error, Result};
use crate::rng;

fn check(pred: &[u8], other: &[u8], what: &str) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::UndefinedMetric(format!("{what} of an empty input")));
    }
    if pred.len() != other.len() {
        return Err(Error::shape(format!("{what}: inputs differ in length")));
    }
    if pred.iter().chain(other).any(|&v| v > 1) {
        return Err(Error::invalid(format!("{what}: values must be binary")));
    }
    Ok(())
}

pub fn accuracy(y_hat: &[u8], y: &[u8]) -> Result<f64> {
    check(y_hat, y, "accuracy")?;
    Ok(y_hat.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64)
}

/// F1 of the positive class; 0 when precision and recall are both zero.
pub fn f1_binary(y_hat: &[u8], y: &[u8]) -> Result<f64> {
    check(y_hat, y, "f1")?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &t) in y_hat.iter().zip(y) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

fn positive_rate<'a>(
    y_hat: &[u8],
    mask: impl Iterator<Item = &'a bool>,
    what: &str,
) -> Result<f64> {
    let (mut pos, mut n) = (0usize, 0usize);
    for (&p, &m) in y_hat.iter().zip(mask) {
        if m {
            n += 1;
            pos += usize::from(p);
        }
    }
    if n == 0 {
        return Err(Error::UndefinedMetric(format!("{what} has no members")));
    }
    Ok(pos as f64 / n as f64)
}

/// `|P(Ŷ=1 | A=1) − P(Ŷ=1 | A=0)|`.
pub fn delta_dp(y_hat: &[u8], a: &[u8]) -> Result<f64> {
    check(y_hat, a, "delta_dp")?;
    let m1: Vec<bool> = a.iter().map(|&g| g == 1).collect();
    let m0: Vec<bool> = a.iter().map(|&g| g == 0).collect();
    let r1 = positive_rate(y_hat, m1.iter(), "group A=1")?;
    let r0 = positive_rate(y_hat, m0.iter(), "group A=0")?;
    Ok((r1 - r0).abs())
}

/// `|TPR(A=1) − TPR(A=0)|` on the `Y = 1` samples.
pub fn delta_eo(y_hat: &[u8], y: &[u8], a: &[u8]) -> Result<f64> {
    check(y_hat, y, "delta_eo")?;
    check(y_hat, a, "delta_eo")?;
    let m1: Vec<bool> = y.iter().zip(a).map(|(&t, &g)| t == 1 && g == 1).collect();
    let m0: Vec<bool> = y.iter().zip(a).map(|(&t, &g)| t == 1 && g == 0).collect();
    let r1 = positive_rate(y_hat, m1.iter(), "positives with A=1")?;
    let r0 = positive_rate(y_hat, m0.iter(), "positives with A=0")?;
    Ok((r1 - r0).abs())
}

/// Area under the ROC curve with tied scores counted as one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::shape("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    // Sum of average ranks of positives (Mann-Whitney U).
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64 * avg_rank;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Sample counts per `(A, Y)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub a0_y0: usize,
    pub a0_y1: usize,
    pub a1_y0: usize,
    pub a1_y1: usize,
}

impl GroupCounts {
    pub fn total(&self) -> usize {
        self.a0_y0 + self.a0_y1 + self.a1_y0 + self.a1_y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub accuracy: f64,
    pub f1: f64,
    pub delta_dp: f64,
    pub delta_eo: f64,
    pub group_counts: GroupCounts,
}

impl FairnessReport {
    /// `a` must be the ground-truth attribute.
    pub fn compute(y_hat: &[u8], y: &[u8], a: &[u8]) -> Result<Self> {
        let mut c = GroupCounts {
            a0_y0: 0,
            a0_y1: 0,
            a1_y0: 0,
            a1_y1: 0,
        };
        for (&t, &g) in y.iter().zip(a) {
            match (g, t) {
                (0, 0) => c.a0_y0 += 1,
                (0, _) => c.a0_y1 += 1,
                (_, 0) => c.a1_y0 += 1,
                _ => c.a1_y1 += 1,
            }
        }
        Ok(Self {
            accuracy: accuracy(y_hat, y)?,
            f1: f1_binary(y_hat, y)?,
            delta_dp: delta_dp(y_hat, a)?,
            delta_eo: delta_eo(y_hat, y, a)?,
            group_counts: c,
        })
    }

    /// Evaluates `model` on `data` against its ground-truth attributes.
    pub fn evaluate(model: &FairSpModel, data: &EncodedDataset) -> Result<Self> {
        let pred = model.predict_dataset(data)?;
        Self::compute(&pred.labels, &data.y, data.ground_truth()?)
    }
}

/// Held-out estimate of the Jensen-Shannon divergence between the two groups'
/// encoder outputs, `(R* + ln 4) / 2` where `R*` is the value of a
/// discriminator fitted on one half of `data` and scored on the other.
///
/// Groups are taken from `data.a`. Diagnostic only.
pub fn embedding_group_gap(
    model: &FairSpModel,
    data: &EncodedDataset,
    config: &BestResponseConfig,
) -> Result<f64> {
    let counts = [0u8, 1].map(|g| data.a.iter().filter(|&&v| v == g).count());
    if counts.iter().any(|&c| c < 30) {
        return Err(Error::UndefinedMetric(format!(
            "group gap needs at least 30 samples per group, got {counts:?}"
        )));
    }
    let e = model.embed_dataset(data)?;
    let (fit, eval) =
        crate::data::split_indices(data.len(), 0.5, rng::derive_seed(config.seed, "group_gap"))?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| data.a[i]).collect::<Vec<u8>>();
    let r = best_response_value(
        &e.select_rows(&fit),
        &pick(&fit),
        &e.select_rows(&eval),
        &pick(&eval),
        config,
    )?;
    Ok((r + 2.0 * std::f64::consts::LN_2) / 2.0)
}
