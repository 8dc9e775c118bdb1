//! Randomized response for binary sensitive attributes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::SemiPrivatePartition;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PrivacyBudget(f64);

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon.is_finite() && epsilon > 0.0 {
            Ok(Self(epsilon))
        } else {
            Err(Error::invalid(format!(
                "privacy budget must be finite and positive, got {epsilon}"
            )))
        }
    }

    pub fn epsilon(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PrivacyBudget {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PrivacyBudget> for f64 {
    fn from(b: PrivacyBudget) -> f64 {
        b.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub epsilon: f64,
    pub flip_prob: f64,
    pub flipped_count: usize,
    pub total: usize,
}

impl NoiseReport {
    pub fn flip_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.flipped_count as f64 / self.total as f64
        }
    }
}

/// `1 / (e^ε + 1)`.
pub fn flip_prob(budget: PrivacyBudget) -> f64 {
    // Written via exp(−ε) so large budgets do not overflow.
    let t = (-budget.epsilon()).exp();
    t / (1.0 + t)
}

/// Flips each entry independently with probability [`flip_prob`].
pub fn randomize(a: &[u8], budget: PrivacyBudget, seed: u64) -> Result<(Vec<u8>, NoiseReport)> {
    let mut rng = rng::stream(seed, "randomize");
    randomize_with(a, budget, &mut rng)
}

pub fn randomize_with<R: Rng + ?Sized>(
    a: &[u8],
    budget: PrivacyBudget,
    rng: &mut R,
) -> Result<(Vec<u8>, NoiseReport)> {
    if let Some(v) = a.iter().find(|&&v| v > 1) {
        return Err(Error::invalid(format!("attribute value {v} is not binary")));
    }
    let p = flip_prob(budget);
    let mut flipped = 0;
    let noised = a
        .iter()
        .map(|&v| {
            if rng.random::<f64>() < p {
                flipped += 1;
                1 - v
            } else {
                v
            }
        })
        .collect();
    Ok((
        noised,
        NoiseReport {
            epsilon: budget.epsilon(),
            flip_prob: p,
            flipped_count: flipped,
            total: a.len(),
        },
    ))
}

/// Conditional output distribution of the mechanism: `P(M(input) = output)`.
pub fn mechanism_prob(budget: PrivacyBudget, input: u8, output: u8) -> f64 {
    let p = flip_prob(budget);
    if input == output {
        1.0 - p
    } else {
        p
    }
}

/// Largest likelihood ratio `P(M(x) = y) / P(M(x') = y)` over outputs and
/// input pairs. Equals `e^ε` for randomized response.
pub fn verify_ldp_ratio(budget: PrivacyBudget) -> f64 {
    let mut worst: f64 = 0.0;
    for y in 0..=1 {
        for x in 0..=1 {
            for x2 in 0..=1 {
                worst = worst.max(mechanism_prob(budget, x, y) / mechanism_prob(budget, x2, y));
            }
        }
    }
    worst
}

/// Randomizes the private subset's observed attribute. `a_true` is kept so
/// that evaluation code can still measure recovery; trainers never read it.
pub fn privatize(
    partition: &SemiPrivatePartition,
    budget: PrivacyBudget,
    seed: u64,
) -> Result<(SemiPrivatePartition, NoiseReport)> {
    let truth = partition.private.ground_truth()?;
    let (noised, report) = randomize(truth, budget, seed)?;
    let mut out = partition.clone();
    out.private = partition.private.with_observed_attributes(noised)?;
    Ok((out, report))
}
