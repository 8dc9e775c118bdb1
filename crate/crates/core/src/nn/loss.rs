//! Cross-entropy losses and their gradients w.r.t. output logits.
//!
//! A single-column output is read as `p(class 1)`; wider outputs are softmax
//! rows indexed by class. Probabilities are clamped to `[PROB_FLOOR, 1 − PROB_FLOOR]`
//! before taking logs.

use super::matrix::Matrix;
use crate::error::{Error, Result};

pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

fn check(output: &Matrix, targets: &[u8], weights: Option<&[f64]>) -> Result<()> {
    if output.rows() != targets.len() {
        return Err(Error::shape(format!(
            "{} outputs but {} targets",
            output.rows(),
            targets.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != targets.len() {
            return Err(Error::shape("weights and targets differ in length"));
        }
    }
    let classes = output.cols().max(2);
    if let Some(&t) = targets.iter().find(|&&t| usize::from(t) >= classes) {
        return Err(Error::invalid(format!(
            "target {t} out of range for {classes} classes"
        )));
    }
    Ok(())
}

#[inline]
fn prob_of_target(output: &Matrix, r: usize, t: u8) -> f64 {
    if output.cols() == 1 {
        let p = output.get(r, 0);
        if t == 1 {
            p
        } else {
            1.0 - p
        }
    } else {
        output.get(r, usize::from(t))
    }
}

/// Mean cross-entropy over the batch.
pub fn cross_entropy(output: &Matrix, targets: &[u8]) -> Result<f64> {
    check(output, targets, None)?;
    if targets.is_empty() {
        return Err(Error::invalid("cross-entropy of an empty batch"));
    }
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(r, &t)| -clamp_prob(prob_of_target(output, r, t)).ln())
        .sum();
    Ok(total / targets.len() as f64)
}

/// `Σ_i w_i · ℓ_i` and its gradient w.r.t. the logits.
///
/// For sigmoid and softmax outputs the logit gradient of `ℓ_i` is `p_i − onehot(t_i)`.
pub fn weighted_cross_entropy_grad(
    output: &Matrix,
    targets: &[u8],
    weights: &[f64],
) -> Result<(f64, Matrix)> {
    check(output, targets, Some(weights))?;
    let mut grad = output.clone();
    let mut loss = 0.0;
    for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
        loss -= w * clamp_prob(prob_of_target(output, r, t)).ln();
        let row = grad.row_mut(r);
        if row.len() == 1 {
            row[0] -= f64::from(t);
        } else {
            row[usize::from(t)] -= 1.0;
        }
        for v in row.iter_mut() {
            *v *= w;
        }
    }
    Ok((loss, grad))
}

/// Mean cross-entropy and its logit gradient (already divided by the batch size).
pub fn cross_entropy_grad(output: &Matrix, targets: &[u8]) -> Result<(f64, Matrix)> {
    if targets.is_empty() {
        return Err(Error::invalid("cross-entropy of an empty batch"));
    }
    let w = vec![1.0 / targets.len() as f64; targets.len()];
    weighted_cross_entropy_grad(output, targets, &w)
}

/// Weights that turn a weighted sum into `mean_{g=1} ℓ + mean_{g=0} ℓ`.
///
/// This is the group-balanced form of an adversary's log-likelihood: each
/// group's expectation is estimated on its own members. A group absent from
/// `groups` simply contributes no term.
pub fn group_balanced_weights(groups: &[u8]) -> Vec<f64> {
    let ones = groups.iter().filter(|&&g| g == 1).count();
    let zeros = groups.len() - ones;
    groups
        .iter()
        .map(|&g| {
            let n = if g == 1 { ones } else { zeros };
            1.0 / n as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_probability_costs_ln2() {
        let out = Matrix::column_vector(&[0.5]);
        let l = cross_entropy(&out, &[1]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn certain_prediction_is_clamped() {
        let out = Matrix::column_vector(&[1.0]);
        let l = cross_entropy(&out, &[1]).unwrap();
        assert!(l > 0.0 && l < 2e-12, "{l}");
        let wrong = cross_entropy(&out, &[0]).unwrap();
        assert!(wrong.is_finite() && (wrong - 27.631).abs() < 1e-3);
    }

    #[test]
    fn two_sample_batch() {
        let out = Matrix::column_vector(&[0.8, 0.2]);
        let l = cross_entropy(&out, &[1, 0]).unwrap();
        assert!((l - 0.223_143_551_314_209_7).abs() < 1e-12);
    }

    #[test]
    fn softmax_targets_index_columns() {
        let out = Matrix::from_rows(&[vec![0.1, 0.9], vec![0.7, 0.3]]).unwrap();
        let l = cross_entropy(&out, &[1, 0]).unwrap();
        assert!((l - (-(0.9f64.ln()) - 0.7f64.ln()) / 2.0).abs() < 1e-15);
        let (_, g) = cross_entropy_grad(&out, &[1, 0]).unwrap();
        assert!((g.get(0, 0) - 0.05).abs() < 1e-15 && (g.get(0, 1) + 0.05).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_and_bad_targets() {
        let out = Matrix::column_vector(&[0.5, 0.5]);
        assert!(cross_entropy(&out, &[1]).is_err());
        assert!(cross_entropy(&out, &[1, 2]).is_err());
        assert!(cross_entropy(&Matrix::zeros(0, 1), &[]).is_err());
    }

    #[test]
    fn balanced_weights_sum_per_group() {
        let w = group_balanced_weights(&[1, 1, 1, 0]);
        assert_eq!(w, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0]);
        assert_eq!(group_balanced_weights(&[0, 0]), vec![0.5, 0.5]);
    }
}
