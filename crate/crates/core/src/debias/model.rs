use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DebiasConfig, TrainerVariant};
use crate::data::EncodedDataset;
use crate::error::{Error, Result};
use crate::nn::{Matrix, MlpSpec, Network, OutputKind};
use crate::rng;

/// What the encoder reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    Features,
    /// Features with the observed attribute appended as the last column.
    FeaturesWithAttribute,
}

impl InputMode {
    pub fn matrix(self, data: &EncodedDataset) -> Result<Matrix> {
        match self {
            InputMode::Features => Ok(data.x.clone()),
            InputMode::FeaturesWithAttribute => data.features_with_attribute(),
        }
    }

    pub fn width(self, feature_width: usize) -> usize {
        match self {
            InputMode::Features => feature_width,
            InputMode::FeaturesWithAttribute => feature_width + 1,
        }
    }
}

/// Encoder, label head and both adversaries, plus what is needed to
/// re-evaluate them exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairSpModel {
    pub variant: TrainerVariant,
    pub input: InputMode,
    pub config: DebiasConfig,
    pub encoder: Network,
    pub label_head: Network,
    pub clean_adversary: Network,
    pub private_adversary: Network,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    /// `1` iff the probability is at least 0.5.
    pub labels: Vec<u8>,
}

impl FairSpModel {
    /// Freshly initialized networks; every network has its own seed stream.
    pub fn init(
        variant: TrainerVariant,
        input: InputMode,
        feature_width: usize,
        config: &DebiasConfig,
    ) -> Result<Self> {
        config.validate()?;
        let act = config.hidden_activation;
        let e = config.encoder_width;
        let encoder = MlpSpec::new(
            vec![input.width(feature_width), e],
            act,
            OutputKind::Embedding,
        );
        let head = MlpSpec::new(
            vec![e, config.head_hidden_width, 1],
            act,
            OutputKind::SigmoidBinary,
        );
        let seed = config.seed;
        Ok(Self {
            variant,
            input,
            config: *config,
            encoder: Network::new(encoder, rng::derive_seed(seed, "encoder"))?,
            label_head: Network::new(head.clone(), rng::derive_seed(seed, "label_head"))?,
            clean_adversary: Network::new(head.clone(), rng::derive_seed(seed, "clean_adversary"))?,
            private_adversary: Network::new(head, rng::derive_seed(seed, "private_adversary"))?,
        })
    }

    pub fn input_width(&self) -> usize {
        self.encoder.spec.input_width()
    }

    pub fn embed(&self, x: &Matrix) -> Result<Matrix> {
        self.encoder.predict(x)
    }

    pub fn embed_dataset(&self, data: &EncodedDataset) -> Result<Matrix> {
        self.embed(&self.input.matrix(data)?)
    }

    /// `f_Y(h(x))` on an already assembled input matrix.
    pub fn predict(&self, x: &Matrix) -> Result<Prediction> {
        let probs = self.label_head.predict(&self.embed(x)?)?;
        let probabilities = probs.into_data();
        let labels = probabilities.iter().map(|&p| u8::from(p >= 0.5)).collect();
        Ok(Prediction {
            probabilities,
            labels,
        })
    }

    /// Assembles the input the model was trained on (appending the dataset's
    /// observed attribute when required) and predicts.
    pub fn predict_dataset(&self, data: &EncodedDataset) -> Result<Prediction> {
        self.predict(&self.input.matrix(data)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text)?;
        for net in [
            &model.encoder,
            &model.label_head,
            &model.clean_adversary,
            &model.private_adversary,
        ] {
            net.spec.validate()?;
            net.params.check_shapes(&net.spec)?;
        }
        if model.label_head.spec.input_width() != model.encoder.spec.output_width() {
            return Err(Error::shape(
                "label head does not consume the encoder output",
            ));
        }
        Ok(model)
    }
}
