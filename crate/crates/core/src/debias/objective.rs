//! Log-likelihood value of the adversarial game.
//!
//! For a discriminator `f` and groups `A`, the value is
//! `mean_{A=1} ln f(e) + mean_{A=0} ln(1 − f(e))`. Its supremum over
//! discriminators is `−ln 4 + 2·JSD(p(e | A=1) ‖ p(e | A=0))`, so it never
//! falls below `−ln 4` and reaches it exactly when the two group-conditional
//! embedding distributions coincide.

use serde::{Deserialize, Serialize};

use super::FairSpModel;
use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::nn::loss::clamp_prob;
use crate::nn::{
    group_balanced_weights, shuffled_batches, weighted_cross_entropy_grad, Activation, Learner,
    Matrix, MlpSpec, Network, OutputKind, TrainConfig,
};
use crate::rng;

const LN_4: f64 = 2.0 * std::f64::consts::LN_2;

/// Training schedule for refitting a discriminator against fixed embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BestResponseConfig {
    pub hidden_width: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for BestResponseConfig {
    fn default() -> Self {
        Self {
            hidden_width: 32,
            train: TrainConfig {
                epochs: 30,
                ..TrainConfig::default()
            },
            seed: 0,
        }
    }
}

/// `mean_{A=1} ln f + mean_{A=0} ln(1 − f)` with probabilities clamped.
pub fn gan_value(probs: &[f64], groups: &[u8]) -> Result<f64> {
    if probs.len() != groups.len() {
        return Err(Error::shape("probabilities and groups differ in length"));
    }
    let mut sum = [0.0; 2];
    let mut count = [0usize; 2];
    for (&p, &g) in probs.iter().zip(groups) {
        let p = clamp_prob(p);
        match g {
            0 => sum[0] += (1.0 - p).ln(),
            1 => sum[1] += p.ln(),
            _ => return Err(Error::invalid("groups must be binary")),
        }
        count[usize::from(g)] += 1;
    }
    if count.contains(&0) {
        return Err(Error::UndefinedMetric(
            "adversary value needs both groups".into(),
        ));
    }
    Ok(sum[0] / count[0] as f64 + sum[1] / count[1] as f64)
}

fn fit_discriminator(
    embeddings: &Matrix,
    groups: &[u8],
    config: &BestResponseConfig,
    stage: &str,
) -> Result<Network> {
    let spec = MlpSpec::new(
        vec![embeddings.cols(), config.hidden_width, 1],
        Activation::Relu,
        OutputKind::SigmoidBinary,
    );
    let mut learner = Learner::new(
        spec,
        rng::derive_seed(config.seed, stage),
        config.train.optimizer,
    )?;
    // Start from the constant 0.5 discriminator.
    learner.net.params.zero_output_layer();
    let mut batch_rng = rng::stream(config.seed, &format!("{stage}_batches"));
    for _ in 0..config.train.epochs {
        for batch in shuffled_batches(groups.len(), config.train.batch_size, &mut batch_rng) {
            let xb = embeddings.select_rows(&batch);
            let gb: Vec<u8> = batch.iter().map(|&i| groups[i]).collect();
            let pass = learner.net.forward(&xb)?;
            let w = group_balanced_weights(&gb);
            let (_, g) = weighted_cross_entropy_grad(pass.output(), &gb, &w)?;
            let grads = learner.net.backward(&pass, &g)?;
            learner.step(&grads)?;
        }
    }
    Ok(learner.net)
}

/// Value of a discriminator fitted on `(fit_embeddings, fit_groups)` and
/// scored on `(eval_embeddings, eval_groups)`, as trained.
pub fn fitted_response_value(
    fit_embeddings: &Matrix,
    fit_groups: &[u8],
    eval_embeddings: &Matrix,
    eval_groups: &[u8],
    config: &BestResponseConfig,
) -> Result<f64> {
    config.train.validate()?;
    if fit_embeddings.rows() != fit_groups.len() || eval_embeddings.rows() != eval_groups.len() {
        return Err(Error::shape("embeddings and groups differ in length"));
    }
    let f = fit_discriminator(fit_embeddings, fit_groups, config, "best_response")?;
    let probs = f.predict(eval_embeddings)?.into_data();
    gan_value(&probs, eval_groups)
}

/// Value of the best discriminator found for fixed embeddings.
///
/// The fitted discriminator of [`fitted_response_value`] competes with the
/// constant 0.5 discriminator, so the result is never below `−ln 4`.
pub fn best_response_value(
    fit_embeddings: &Matrix,
    fit_groups: &[u8],
    eval_embeddings: &Matrix,
    eval_groups: &[u8],
    config: &BestResponseConfig,
) -> Result<f64> {
    Ok(fitted_response_value(
        fit_embeddings,
        fit_groups,
        eval_embeddings,
        eval_groups,
        config,
    )?
    .max(-LN_4))
}

/// Which per-adversary value the objective sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    /// Fitted discriminator or the constant one, whichever is better.
    Best,
    /// Fitted discriminator only. Can fall below the bound if fitting fails.
    Fitted,
}

/// `R = V_c + α·V_p` with in-sample discriminators for fixed embeddings. The
/// private term is dropped when `alpha` is zero or the private set is empty.
pub fn objective_from_embeddings(
    clean_embeddings: &Matrix,
    clean_groups: &[u8],
    private_embeddings: &Matrix,
    private_groups: &[u8],
    alpha: f64,
    config: &BestResponseConfig,
) -> Result<f64> {
    objective_with(
        clean_embeddings,
        clean_groups,
        private_embeddings,
        private_groups,
        alpha,
        config,
        ResponseKind::Best,
    )
}

pub fn objective_with(
    clean_embeddings: &Matrix,
    clean_groups: &[u8],
    private_embeddings: &Matrix,
    private_groups: &[u8],
    alpha: f64,
    config: &BestResponseConfig,
    kind: ResponseKind,
) -> Result<f64> {
    let value = match kind {
        ResponseKind::Best => best_response_value,
        ResponseKind::Fitted => fitted_response_value,
    };
    let vc = value(
        clean_embeddings,
        clean_groups,
        clean_embeddings,
        clean_groups,
        config,
    )?;
    if alpha == 0.0 || private_groups.is_empty() {
        return Ok(vc);
    }
    let vp = value(
        private_embeddings,
        private_groups,
        private_embeddings,
        private_groups,
        config,
    )?;
    Ok(vc + alpha * vp)
}

/// Adversarial game value for a trained encoder; bounded below by
/// `−(1 + α)·ln 4`.
pub fn adversary_objective_value(
    model: &FairSpModel,
    clean: &EncodedDataset,
    corrected: &EncodedDataset,
    alpha: f64,
    config: &BestResponseConfig,
) -> Result<f64> {
    adversary_objective_with(model, clean, corrected, alpha, config, ResponseKind::Best)
}

pub fn adversary_objective_with(
    model: &FairSpModel,
    clean: &EncodedDataset,
    corrected: &EncodedDataset,
    alpha: f64,
    config: &BestResponseConfig,
    kind: ResponseKind,
) -> Result<f64> {
    let ec = model.embed_dataset(clean)?;
    let ep = if corrected.is_empty() {
        Matrix::zeros(0, ec.cols())
    } else {
        model.embed_dataset(corrected)?
    };
    objective_with(&ec, &clean.a, &ep, &corrected.a, alpha, config, kind)
}
