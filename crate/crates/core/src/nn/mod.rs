//! Minimal feed-forward network engine.
//!
//! Small fixed-architecture MLPs with explicit backpropagation, a
//! gradient-reversal helper for adversarial heads, and Adadelta.

pub mod loss;
pub mod matrix;
pub mod mlp;
pub mod optim;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use loss::{
    cross_entropy, cross_entropy_grad, group_balanced_weights, weighted_cross_entropy_grad,
};
pub use matrix::Matrix;
pub use mlp::{
    backward, backward_with_input_grad, forward, init_params, output_grad_to_logits,
    reverse_gradient, sigmoid, softmax_rows, Activation, Backprop, ForwardPass, GradSet, MlpParams,
    MlpSpec, Network, OutputKind,
};
pub use optim::{adadelta_step, AdadeltaConfig, AdadeltaState};

use crate::error::{Error, Result};

/// Mini-batch schedule shared by every trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdadeltaConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 128,
            optimizer: AdadeltaConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        self.optimizer.validate()
    }
}

/// A network paired with its optimizer state.
#[derive(Debug, Clone)]
pub struct Learner {
    pub net: Network,
    pub opt: AdadeltaState,
}

impl Learner {
    pub fn new(spec: MlpSpec, seed: u64, optimizer: AdadeltaConfig) -> Result<Self> {
        let net = Network::new(spec, seed)?;
        let opt = AdadeltaState::new(&net.spec, optimizer)?;
        Ok(Self { net, opt })
    }

    pub fn from_network(net: Network, optimizer: AdadeltaConfig) -> Result<Self> {
        let opt = AdadeltaState::new(&net.spec, optimizer)?;
        Ok(Self { net, opt })
    }

    pub fn step(&mut self, grads: &GradSet) -> Result<()> {
        self.opt.step(&mut self.net.params, grads)
    }
}

/// Shuffled index batches covering `0..n` once.
pub fn shuffled_batches<R: Rng + ?Sized>(
    n: usize,
    batch_size: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(batch_size.max(1))
        .map(<[usize]>::to_vec)
        .collect()
}

/// Shuffles two pools independently and deals both into the same number of
/// batches, so each batch holds a proportional share of every pool.
///
/// The batch count is `ceil((n_a + n_b) / batch_size)`.
pub fn stratified_batches<R: Rng + ?Sized>(
    n_a: usize,
    n_b: usize,
    batch_size: usize,
    rng: &mut R,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let count = (n_a + n_b).div_ceil(batch_size.max(1));
    let mut a: Vec<usize> = (0..n_a).collect();
    a.shuffle(rng);
    let mut b: Vec<usize> = (0..n_b).collect();
    b.shuffle(rng);
    let cut = |n: usize, k: usize| k * n / count;
    (0..count)
        .map(|k| {
            (
                a[cut(n_a, k)..cut(n_a, k + 1)].to_vec(),
                b[cut(n_b, k)..cut(n_b, k + 1)].to_vec(),
            )
        })
        .collect()
}

/// Trains `learner` with mean cross-entropy against `targets`.
pub fn train_classifier<R: Rng + ?Sized>(
    learner: &mut Learner,
    x: &Matrix,
    targets: &[u8],
    config: &TrainConfig,
    rng: &mut R,
) -> Result<()> {
    config.validate()?;
    if x.rows() != targets.len() {
        return Err(Error::shape("features and targets differ in length"));
    }
    if targets.is_empty() {
        return Err(Error::invalid("cannot train on an empty set"));
    }
    for _ in 0..config.epochs {
        for batch in shuffled_batches(targets.len(), config.batch_size, rng) {
            let xb = x.select_rows(&batch);
            let tb: Vec<u8> = batch.iter().map(|&i| targets[i]).collect();
            let pass = learner.net.forward(&xb)?;
            let (_, g) = cross_entropy_grad(pass.output(), &tb)?;
            let grads = learner.net.backward(&pass, &g)?;
            learner.step(&grads)?;
        }
    }
    Ok(())
}
