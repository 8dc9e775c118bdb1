//! Learning to correct randomized sensitive attributes.
//!
//! 1. `g` is trained on the private subset to predict the noised attribute.
//! 2. `g` averaged over clean samples of each true group estimates the
//!    corruption matrix `Ĉ[m][r] = p(A_p = r | A_c = m)`.
//! 3. `g'` is trained with plain cross-entropy on clean attributes and with a
//!    forward-corrected loss `CE(a_p, Ĉᵀ g'(x))` on noised attributes.
//! 4. `A_p' = argmax g'(x)` replaces the noised attributes.
//!
//! The estimate of `Ĉ` is valid when the noise is conditionally independent
//! of the features given the true attribute, which randomized response
//! satisfies by construction.

use serde::{Deserialize, Serialize};

use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::nn::{
    loss::clamp_prob, stratified_batches, train_classifier, Activation, Learner, Matrix, MlpSpec,
    Network, OutputKind, TrainConfig,
};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectionConfig {
    pub hidden_width: usize,
    pub hidden_activation: Activation,
    pub train: TrainConfig,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            hidden_width: 64,
            hidden_activation: Activation::Relu,
            train: TrainConfig::default(),
        }
    }
}

impl CorrectionConfig {
    pub fn network_spec(&self, input_width: usize) -> MlpSpec {
        MlpSpec::new(
            vec![input_width, self.hidden_width, 2],
            self.hidden_activation,
            OutputKind::Softmax,
        )
    }
}

/// Row-stochastic 2×2 matrix; `c[m][r] = p(A_p = r | A_c = m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionMatrix {
    pub c: [[f64; 2]; 2],
}

const ROW_SUM_TOL: f64 = 1e-9;

impl CorruptionMatrix {
    pub fn new(c: [[f64; 2]; 2]) -> Result<Self> {
        let m = Self { c };
        m.validate()?;
        Ok(m)
    }

    pub fn identity() -> Self {
        Self {
            c: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// Transition matrix of randomized response with flip probability `p`.
    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new([[1.0 - p, p], [p, 1.0 - p]])
    }

    pub fn get(&self, m: usize, r: usize) -> f64 {
        self.c[m][r]
    }

    pub fn validate(&self) -> Result<()> {
        for (m, row) in self.c.iter().enumerate() {
            if row
                .iter()
                .any(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
            {
                return Err(Error::invalid(format!(
                    "corruption matrix row {m} has entries outside [0,1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if sum == 0.0 {
                return Err(Error::Degenerate(format!(
                    "corruption matrix row {m} is all zeros"
                )));
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!(
                    "corruption matrix row {m} sums to {sum}"
                )));
            }
        }
        Ok(())
    }

    /// `Ĉᵀ s`, renormalized to sum to one.
    pub fn corrupt(&self, s: [f64; 2]) -> [f64; 2] {
        let q = self.corrupt_raw(s);
        let total = (q[0] + q[1]).max(crate::nn::loss::PROB_FLOOR);
        [q[0] / total, q[1] / total]
    }

    fn corrupt_raw(&self, s: [f64; 2]) -> [f64; 2] {
        [
            self.c[0][0] * s[0] + self.c[1][0] * s[1],
            self.c[0][1] * s[0] + self.c[1][1] * s[1],
        ]
    }

    /// Averages `p̂(A_p = 1 | x)` over clean samples in each true group.
    pub fn estimate_from_probs(prob_noisy_one: &[f64], clean_a: &[u8]) -> Result<Self> {
        if prob_noisy_one.len() != clean_a.len() {
            return Err(Error::shape(
                "probabilities and attributes differ in length",
            ));
        }
        let mut sum = [0.0; 2];
        let mut count = [0usize; 2];
        for (&p, &m) in prob_noisy_one.iter().zip(clean_a) {
            if m > 1 {
                return Err(Error::invalid(format!("attribute value {m} is not binary")));
            }
            sum[usize::from(m)] += p;
            count[usize::from(m)] += 1;
        }
        let mut c = [[0.0; 2]; 2];
        for m in 0..2 {
            if count[m] == 0 {
                return Err(Error::Degenerate(format!(
                    "no clean samples with attribute {m}; cannot estimate that row"
                )));
            }
            let p1 = (sum[m] / count[m] as f64).clamp(0.0, 1.0);
            c[m] = [1.0 - p1, p1];
        }
        Self::new(c)
    }
}

fn check_binary_classes(a: &[u8], what: &str) -> Result<()> {
    let ones = a.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == a.len() {
        return Err(Error::Degenerate(format!(
            "{what} contains a single attribute value"
        )));
    }
    Ok(())
}

/// Trains `g` on the private subset's observed (noised) attributes.
pub fn train_noisy_attr_predictor(
    private: &EncodedDataset,
    config: &CorrectionConfig,
    seed: u64,
) -> Result<Network> {
    let view = private.view();
    if view.is_empty() {
        return Err(Error::EmptySplit("private subset is empty".into()));
    }
    check_binary_classes(view.a, "private subset")?;
    let spec = config.network_spec(private.feature_width());
    let mut learner = Learner::new(
        spec,
        rng::derive_seed(seed, "g_init"),
        config.train.optimizer,
    )?;
    let mut batches = rng::stream(seed, "g_batches");
    train_classifier(&mut learner, view.x, view.a, &config.train, &mut batches)?;
    Ok(learner.net)
}

pub fn estimate_corruption_matrix(g: &Network, clean: &EncodedDataset) -> Result<CorruptionMatrix> {
    if clean.is_empty() {
        return Err(Error::EmptySplit("clean subset is empty".into()));
    }
    let probs = g.predict(&clean.x)?;
    if probs.cols() != 2 {
        return Err(Error::shape("attribute predictor must output two classes"));
    }
    CorruptionMatrix::estimate_from_probs(&probs.column(1), &clean.a)
}

/// Forward-corrected cross-entropy `Σ_i w_i · −ln (Ĉᵀ s_i)[t_i]` and its
/// gradient w.r.t. the softmax outputs `s`.
pub fn forward_corrected_loss(
    probs: &Matrix,
    noisy_targets: &[u8],
    weights: &[f64],
    c_hat: &CorruptionMatrix,
) -> Result<(f64, Matrix)> {
    if probs.cols() != 2
        || probs.rows() != noisy_targets.len()
        || weights.len() != noisy_targets.len()
    {
        return Err(Error::shape(
            "forward-corrected loss needs n×2 probabilities and n targets",
        ));
    }
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(probs.rows(), 2);
    for (i, (&t, &w)) in noisy_targets.iter().zip(weights).enumerate() {
        let t = usize::from(t);
        if t > 1 {
            return Err(Error::invalid("targets must be binary"));
        }
        let s = [probs.get(i, 0), probs.get(i, 1)];
        let q = c_hat.corrupt_raw(s);
        let total = (q[0] + q[1]).max(crate::nn::loss::PROB_FLOOR);
        let qt = clamp_prob(q[t] / total);
        loss -= w * qt.ln();
        for m in 0..2 {
            let row_sum = c_hat.c[m][0] + c_hat.c[m][1];
            let dqt = c_hat.c[m][t] / total - q[t] * row_sum / (total * total);
            grad.set(i, m, -w * dqt / qt);
        }
    }
    Ok((loss, grad))
}

/// Trains `g'` from a fresh initialization on clean attributes plus
/// forward-corrected noised attributes. `Ĉ` stays fixed throughout.
pub fn train_corrector(
    clean: &EncodedDataset,
    private: &EncodedDataset,
    c_hat: &CorruptionMatrix,
    config: &CorrectionConfig,
    seed: u64,
) -> Result<Network> {
    c_hat.validate()?;
    config.train.validate()?;
    if clean.is_empty() && private.is_empty() {
        return Err(Error::EmptySplit("corrector has no training data".into()));
    }
    if !clean.is_empty() && !private.is_empty() && clean.feature_width() != private.feature_width()
    {
        return Err(Error::shape(
            "clean and private subsets differ in feature width",
        ));
    }
    let width = if clean.is_empty() {
        private.feature_width()
    } else {
        clean.feature_width()
    };
    let spec = config.network_spec(width);
    let mut learner = Learner::new(
        spec,
        rng::derive_seed(seed, "g_prime_init"),
        config.train.optimizer,
    )?;
    let mut rng = rng::stream(seed, "g_prime_batches");
    let (cv, pv) = (clean.view(), private.view());
    for _ in 0..config.train.epochs {
        for (cb, pb) in stratified_batches(cv.len(), pv.len(), config.train.batch_size, &mut rng) {
            let nc = cb.len();
            let np = pb.len();
            let xb = Matrix::vstack(&[&cv.x.select_rows(&cb), &pv.x.select_rows(&pb)])?;
            let pass = learner.net.forward(&xb)?;
            let out = pass.output();
            let mut grad_logits = Matrix::zeros(nc + np, 2);
            if nc > 0 {
                let w = 1.0 / nc as f64;
                for (i, &k) in cb.iter().enumerate() {
                    let t = usize::from(cv.a[k]);
                    for c in 0..2 {
                        let onehot = if c == t { 1.0 } else { 0.0 };
                        grad_logits.set(i, c, w * (out.get(i, c) - onehot));
                    }
                }
            }
            if np > 0 {
                let probs = Matrix::from_rows(
                    &(nc..nc + np)
                        .map(|i| out.row(i).to_vec())
                        .collect::<Vec<_>>(),
                )?;
                let targets: Vec<u8> = pb.iter().map(|&k| pv.a[k]).collect();
                let w = vec![1.0 / np as f64; np];
                let (_, g_out) = forward_corrected_loss(&probs, &targets, &w, c_hat)?;
                for i in 0..np {
                    let s = out.row(nc + i);
                    let g = g_out.row(i);
                    let dot = s[0] * g[0] + s[1] * g[1];
                    for c in 0..2 {
                        grad_logits.set(nc + i, c, s[c] * (g[c] - dot));
                    }
                }
            }
            let grads = learner.net.backward(&pass, &grad_logits)?;
            learner.step(&grads)?;
        }
    }
    Ok(learner.net)
}

/// Hard labels `argmax g'(x)`; an exact tie goes to 0.
pub fn argmax_attributes(probs: &Matrix) -> Vec<u8> {
    (0..probs.rows())
        .map(|r| u8::from(probs.get(r, 1) > probs.get(r, 0)))
        .collect()
}

/// Replaces the observed attribute with `argmax g'(x)`. Features, labels and
/// retained ground truth are unchanged.
pub fn correct_attributes(g_prime: &Network, private: &EncodedDataset) -> Result<EncodedDataset> {
    if private.is_empty() {
        return Ok(private.clone());
    }
    let probs = g_prime.predict(&private.x)?;
    private.with_observed_attributes(argmax_attributes(&probs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorBundle {
    pub g: Network,
    pub c_hat: CorruptionMatrix,
    pub g_prime: Network,
}

/// Agreement of attribute estimates with the private subset's ground truth.
/// Evaluation only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionDiagnostics {
    /// Noised attributes vs truth.
    pub noised_accuracy: f64,
    /// `argmax g(x)` vs truth.
    pub g_accuracy: f64,
    /// `argmax g'(x)` vs truth.
    pub corrected_accuracy: f64,
}

fn agreement(a: &[u8], b: &[u8]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len().max(1) as f64
}

impl CorrectorBundle {
    /// Runs the full correction sequence on a partition whose private subset
    /// has already been randomized.
    pub fn fit(
        clean: &EncodedDataset,
        private: &EncodedDataset,
        config: &CorrectionConfig,
        seed: u64,
    ) -> Result<Self> {
        let g = train_noisy_attr_predictor(private, config, seed)?;
        let c_hat = estimate_corruption_matrix(&g, clean)?;
        let g_prime = train_corrector(clean, private, &c_hat, config, seed)?;
        Ok(Self { g, c_hat, g_prime })
    }

    pub fn correct(&self, private: &EncodedDataset) -> Result<EncodedDataset> {
        correct_attributes(&self.g_prime, private)
    }

    /// `None` when the private subset carries no ground truth.
    pub fn diagnostics(&self, private: &EncodedDataset) -> Result<Option<CorrectionDiagnostics>> {
        let Some(truth) = private.a_true.as_deref() else {
            return Ok(None);
        };
        if private.is_empty() {
            return Ok(None);
        }
        let g_hat = argmax_attributes(&self.g.predict(&private.x)?);
        let corrected = argmax_attributes(&self.g_prime.predict(&private.x)?);
        Ok(Some(CorrectionDiagnostics {
            noised_accuracy: agreement(&private.a, truth),
            g_accuracy: agreement(&g_hat, truth),
            corrected_accuracy: agreement(&corrected, truth),
        }))
    }
}
