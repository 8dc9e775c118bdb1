//! Gaussian synthetic datasets with a known generating process.
//!
//! Features are drawn from a group-conditional diagonal Gaussian, so the
//! attribute posterior `p(A = 1 | x)` has a closed form that tests use as an
//! oracle.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::EncodedDataset;
use crate::error::{Error, Result};
use crate::nn::{sigmoid, Matrix};
use crate::rng;

/// Diagonal Gaussian for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupGaussian {
    pub mean: Vec<f64>,
    /// Per-feature standard deviation; zero gives a constant feature.
    pub std: Vec<f64>,
}

impl GroupGaussian {
    pub fn isotropic(mean: Vec<f64>, std: f64) -> Self {
        let d = mean.len();
        Self {
            mean,
            std: vec![std; d],
        }
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| {
                let z = (v - m) / s;
                -0.5 * z * z - s.ln()
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// `Y ~ Bernoulli(σ(z))`.
    Bernoulli,
    /// `Y = 1` iff `z > 0`.
    Threshold,
}

/// `z = intercept + weights · x + group_weight · a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRule {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub group_weight: f64,
    pub mode: LabelMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    /// `p(A = 1)`.
    pub p_group: f64,
    pub group0: GroupGaussian,
    pub group1: GroupGaussian,
    pub label: LabelRule,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn feature_dim(&self) -> usize {
        self.group0.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.feature_dim();
        if d == 0 {
            return Err(Error::invalid("synthetic spec needs at least one feature"));
        }
        for g in [&self.group0, &self.group1] {
            if g.mean.len() != d || g.std.len() != d {
                return Err(Error::shape(
                    "group Gaussians disagree on feature dimension",
                ));
            }
            if g.std.iter().any(|s| !(s.is_finite() && *s >= 0.0))
                || g.mean.iter().any(|m| !m.is_finite())
            {
                return Err(Error::invalid(
                    "group Gaussian parameters must be finite with std >= 0",
                ));
            }
        }
        if self.label.weights.len() != d {
            return Err(Error::shape("label weights must match feature dimension"));
        }
        if !(0.0..=1.0).contains(&self.p_group) {
            return Err(Error::invalid(format!(
                "p_group {} outside [0,1]",
                self.p_group
            )));
        }
        Ok(())
    }

    /// Closed-form `p(A = 1 | x)` under the generating process.
    ///
    /// Requires strictly positive standard deviations.
    pub fn attribute_posterior(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_dim() {
            return Err(Error::shape("posterior input has the wrong width"));
        }
        if self
            .group0
            .std
            .iter()
            .chain(&self.group1.std)
            .any(|&s| s <= 0.0)
        {
            return Err(Error::invalid(
                "posterior undefined for zero-variance features",
            ));
        }
        let l1 = self.p_group.ln() + self.group1.log_density(x);
        let l0 = (1.0 - self.p_group).ln() + self.group0.log_density(x);
        Ok(sigmoid(l1 - l0))
    }

    /// A correlates with both the features and the label.
    pub fn biased(n: usize, seed: u64) -> Self {
        let d = 8;
        let mut m1 = vec![0.0; d];
        m1[0] = 1.0;
        m1[1] = 0.8;
        let mut w = vec![0.0; d];
        w[0] = 0.8;
        w[2] = 1.0;
        w[3] = -0.8;
        w[4] = 0.6;
        Self {
            n,
            p_group: 0.5,
            group0: GroupGaussian::isotropic(vec![0.0; d], 1.0),
            group1: GroupGaussian::isotropic(m1, 1.0),
            label: LabelRule {
                intercept: -0.8,
                weights: w,
                group_weight: 1.5,
                mode: LabelMode::Bernoulli,
            },
            seed,
        }
    }

    /// A is independent of both features and label.
    pub fn unbiased(n: usize, seed: u64) -> Self {
        let mut s = Self::biased(n, seed);
        s.group1 = s.group0.clone();
        s.label.group_weight = 0.0;
        s
    }

    /// Two isotropic unit-variance groups whose means differ by `shift` along
    /// the first feature; the label ignores A.
    pub fn gaussian_attribute(n: usize, d: usize, shift: f64, seed: u64) -> Self {
        let mut m1 = vec![0.0; d];
        m1[0] = shift;
        let mut w = vec![0.0; d];
        if d > 1 {
            w[1] = 1.0;
        }
        Self {
            n,
            p_group: 0.5,
            group0: GroupGaussian::isotropic(vec![0.0; d], 1.0),
            group1: GroupGaussian::isotropic(m1, 1.0),
            label: LabelRule {
                intercept: 0.0,
                weights: w,
                group_weight: 0.0,
                mode: LabelMode::Bernoulli,
            },
            seed,
        }
    }

    /// Unbalanced groups and a minority positive class, loosely shaped like
    /// census income data.
    pub fn adult_proxy(n: usize, seed: u64) -> Self {
        let d = 12;
        let mut m1 = vec![0.0; d];
        m1[0] = 0.9;
        m1[1] = 0.6;
        m1[2] = -0.5;
        let mut w = vec![0.0; d];
        for (j, v) in [(0, 0.7), (3, 1.1), (4, -0.9), (5, 0.8), (6, 0.5), (7, -0.4)] {
            w[j] = v;
        }
        Self {
            n,
            p_group: 0.67,
            group0: GroupGaussian::isotropic(vec![0.0; d], 1.0),
            group1: GroupGaussian::isotropic(m1, 1.0),
            label: LabelRule {
                intercept: -2.2,
                weights: w,
                group_weight: 1.4,
                mode: LabelMode::Bernoulli,
            },
            seed,
        }
    }
}

/// Draws `spec.n` rows. The returned dataset is clean: `a_true == a`.
pub fn synthesize(spec: &SyntheticSpec) -> Result<EncodedDataset> {
    spec.validate()?;
    let d = spec.feature_dim();
    let mut rng = rng::stream(spec.seed, "synthesize");
    let mut x = Vec::with_capacity(spec.n * d);
    let mut y = Vec::with_capacity(spec.n);
    let mut a = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let group = u8::from(rng.random::<f64>() < spec.p_group);
        let g = if group == 1 {
            &spec.group1
        } else {
            &spec.group0
        };
        let start = x.len();
        for (m, s) in g.mean.iter().zip(&g.std) {
            let z: f64 = rng.sample(StandardNormal);
            x.push(m + s * z);
        }
        let row = &x[start..];
        let logit = spec.label.intercept
            + row
                .iter()
                .zip(&spec.label.weights)
                .map(|(v, w)| v * w)
                .sum::<f64>()
            + spec.label.group_weight * f64::from(group);
        let u: f64 = rng.random();
        let label = match spec.label.mode {
            LabelMode::Bernoulli => u < sigmoid(logit),
            LabelMode::Threshold => logit > 0.0,
        };
        a.push(group);
        y.push(u8::from(label));
    }
    EncodedDataset::with_clean_attributes(Matrix::from_vec(spec.n, d, x)?, y, a)
}
