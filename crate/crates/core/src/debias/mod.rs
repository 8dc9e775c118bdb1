//! Semi-private adversarial debiasing.
//!
//! A shared encoder `h` feeds a label head `f_Y` and two attribute adversaries:
//! `f_c` sees clean-subset embeddings with true attributes and `f_p` sees
//! private-subset embeddings with corrected (or raw noised) attributes. The
//! adversaries minimize their group-balanced cross-entropy; the encoder and
//! label head minimize `L_Y` while receiving the adversaries' gradients
//! reversed with weights `β` and `β·α`.

mod model;
mod objective;
mod train;

pub use model::{FairSpModel, InputMode, Prediction};
pub use objective::{
    adversary_objective_value, adversary_objective_with, best_response_value,
    fitted_response_value, gan_value, objective_from_embeddings, objective_with,
    BestResponseConfig, ResponseKind,
};
pub use train::{
    adversary_update, balanced_adversary_loss, train_baseline, train_fairsp, train_with_plan,
    EpochObserver, EpochStats, TrainPlan, TrainedModel,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DebiasConfig {
    /// Weight of the private adversary relative to the clean one.
    pub alpha: f64,
    /// Weight of the adversarial term against the label loss.
    pub beta: f64,
    pub train: TrainConfig,
    pub adversary_steps_per_batch: usize,
    pub seed: u64,
    pub encoder_width: usize,
    pub head_hidden_width: usize,
    pub hidden_activation: Activation,
}

impl Default for DebiasConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            train: TrainConfig::default(),
            adversary_steps_per_batch: 1,
            seed: 0,
            encoder_width: 64,
            head_hidden_width: 32,
            hidden_activation: Activation::Relu,
        }
    }
}

impl DebiasConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::invalid(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if self.adversary_steps_per_batch == 0 {
            return Err(Error::invalid("adversary_steps_per_batch must be positive"));
        }
        if self.encoder_width == 0 || self.head_hidden_width == 0 {
            return Err(Error::invalid("layer widths must be positive"));
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainerVariant {
    /// Corrected private attributes, two adversaries.
    Fairsp,
    /// Features plus the observed attribute, no adversary.
    Vanilla,
    /// Features only, no adversary.
    RemoveS,
    /// Adversarial training on the clean subset alone.
    CleanOnly,
    /// Adversarial training on the private subset alone, noised attributes taken as given.
    PrivateOnly,
    /// Both subsets and both adversaries, noised attributes taken as given.
    CleanPlusPrivate,
}

impl TrainerVariant {
    pub const ALL: [TrainerVariant; 6] = [
        TrainerVariant::Vanilla,
        TrainerVariant::RemoveS,
        TrainerVariant::CleanOnly,
        TrainerVariant::PrivateOnly,
        TrainerVariant::CleanPlusPrivate,
        TrainerVariant::Fairsp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrainerVariant::Fairsp => "fairsp",
            TrainerVariant::Vanilla => "vanilla",
            TrainerVariant::RemoveS => "remove_s",
            TrainerVariant::CleanOnly => "clean_only",
            TrainerVariant::PrivateOnly => "private_only",
            TrainerVariant::CleanPlusPrivate => "clean_plus_private",
        }
    }

    pub fn uses_correction(self) -> bool {
        self == TrainerVariant::Fairsp
    }
}

impl std::fmt::Display for TrainerVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TrainerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        TrainerVariant::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown variant `{s}`")))
    }
}
