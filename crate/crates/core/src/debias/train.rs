use serde::{Deserialize, Serialize};

use super::{DebiasConfig, FairSpModel, InputMode, TrainerVariant};
use crate::data::{EncodedDataset, SemiPrivatePartition};
use crate::error::{Error, Result};
use crate::nn::{
    cross_entropy_grad, group_balanced_weights, reverse_gradient, stratified_batches,
    weighted_cross_entropy_grad, AdadeltaState, ForwardPass, GradSet, Matrix, Network,
};
use crate::rng;

/// Called after every epoch with the epoch index and the current model.
pub type EpochObserver<'a> = &'a mut dyn FnMut(usize, &FairSpModel) -> Result<()>;

/// Which subsets feed which losses.
///
/// `pool_a` and `pool_b` are the two training pools (in the full method:
/// clean and corrected-private). Both always contribute to the label loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainPlan {
    pub input: InputMode,
    /// Train `f_c` on pool A and reverse its gradient into the encoder.
    pub clean_adversary: bool,
    /// Train `f_p` on pool B and reverse its gradient into the encoder.
    pub private_adversary: bool,
}

impl TrainPlan {
    pub const ADVERSARIAL: TrainPlan = TrainPlan {
        input: InputMode::Features,
        clean_adversary: true,
        private_adversary: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// Mean label cross-entropy over the epoch's batches.
    pub label_loss: f64,
    /// Mean group-balanced adversary cross-entropy (after its update), or
    /// `None` when that adversary is inactive.
    pub clean_adversary_loss: Option<f64>,
    pub private_adversary_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: FairSpModel,
    pub history: Vec<EpochStats>,
}

struct Opt {
    encoder: AdadeltaState,
    label: AdadeltaState,
    clean: AdadeltaState,
    private: AdadeltaState,
}

/// Balanced cross-entropy of an adversary on embeddings `e`, with the logit
/// gradient.
fn adversary_loss(head: &Network, e: &Matrix, groups: &[u8]) -> Result<(ForwardPass, f64, Matrix)> {
    let pass = head.forward(e)?;
    let w = group_balanced_weights(groups);
    let (loss, g) = weighted_cross_entropy_grad(pass.output(), groups, &w)?;
    Ok((pass, loss, g))
}

/// Group-balanced cross-entropy of an adversary head on fixed embeddings.
pub fn balanced_adversary_loss(head: &Network, e: &Matrix, groups: &[u8]) -> Result<f64> {
    Ok(adversary_loss(head, e, groups)?.1)
}

/// One descent step of an adversary head on its balanced cross-entropy, with
/// the embeddings held fixed. Returns the loss before the step.
pub fn adversary_update(
    head: &mut Network,
    opt: &mut AdadeltaState,
    e: &Matrix,
    groups: &[u8],
) -> Result<f64> {
    let (pass, loss, g) = adversary_loss(head, e, groups)?;
    let grads = head.backward(&pass, &g)?;
    opt.step(&mut head.params, &grads)?;
    Ok(loss)
}

fn split_rows(m: &Matrix, at: usize) -> Result<(Matrix, Matrix)> {
    let top: Vec<usize> = (0..at).collect();
    let bottom: Vec<usize> = (at..m.rows()).collect();
    Ok((m.select_rows(&top), m.select_rows(&bottom)))
}

/// Embeds rows-gradient for a sub-block back into a full-batch matrix.
fn place_rows(total_rows: usize, offset: usize, block: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(total_rows, block.cols());
    for r in 0..block.rows() {
        out.row_mut(offset + r).copy_from_slice(block.row(r));
    }
    out
}

/// Generic two-pool trainer behind every variant.
///
/// Per batch: (1) each active adversary takes
/// `adversary_steps_per_batch` descent steps on its balanced cross-entropy
/// with the encoder frozen; (2) the encoder and label head take one step on
/// the label loss plus the adversaries' encoder gradients reversed with
/// weights `β` (clean) and `β·α` (private).
///
/// Only the observed attribute `a` of each pool is read.
pub fn train_with_plan(
    pool_a: &EncodedDataset,
    pool_b: &EncodedDataset,
    variant: TrainerVariant,
    plan: TrainPlan,
    config: &DebiasConfig,
    mut observer: Option<EpochObserver<'_>>,
) -> Result<TrainedModel> {
    config.validate()?;
    let width = match (pool_a.is_empty(), pool_b.is_empty()) {
        (true, true) => return Err(Error::EmptySplit("no training data".into())),
        (false, _) => pool_a.feature_width(),
        (true, false) => pool_b.feature_width(),
    };
    if !pool_a.is_empty() && !pool_b.is_empty() && pool_a.feature_width() != pool_b.feature_width()
    {
        return Err(Error::shape("training pools differ in feature width"));
    }
    let mut model = FairSpModel::init(variant, plan.input, width, config)?;
    let opt_cfg = config.train.optimizer;
    let mut opt = Opt {
        encoder: AdadeltaState::new(&model.encoder.spec, opt_cfg)?,
        label: AdadeltaState::new(&model.label_head.spec, opt_cfg)?,
        clean: AdadeltaState::new(&model.clean_adversary.spec, opt_cfg)?,
        private: AdadeltaState::new(&model.private_adversary.spec, opt_cfg)?,
    };
    let xa = if pool_a.is_empty() {
        Matrix::zeros(0, plan.input.width(width))
    } else {
        plan.input.matrix(pool_a)?
    };
    let xb = if pool_b.is_empty() {
        Matrix::zeros(0, plan.input.width(width))
    } else {
        plan.input.matrix(pool_b)?
    };
    let (va, vb) = (pool_a.view(), pool_b.view());
    let beta = config.beta;
    let alpha = config.alpha;
    let mut batch_rng = rng::stream(config.seed, "debias_batches");
    let mut history = Vec::with_capacity(config.train.epochs);

    for epoch in 0..config.train.epochs {
        let mut label_sum = 0.0;
        let mut clean_sum = 0.0;
        let mut private_sum = 0.0;
        let (mut n_batches, mut n_clean, mut n_private) = (0usize, 0usize, 0usize);
        for (ia, ib) in
            stratified_batches(va.len(), vb.len(), config.train.batch_size, &mut batch_rng)
        {
            let na = ia.len();
            let x = Matrix::vstack(&[&xa.select_rows(&ia), &xb.select_rows(&ib)])?;
            let y: Vec<u8> = ia
                .iter()
                .map(|&i| va.y[i])
                .chain(ib.iter().map(|&i| vb.y[i]))
                .collect();
            let ga: Vec<u8> = ia.iter().map(|&i| va.a[i]).collect();
            let gb: Vec<u8> = ib.iter().map(|&i| vb.a[i]).collect();

            let enc_pass = model.encoder.forward(&x)?;
            let e = enc_pass.output();
            let (ea, eb) = split_rows(e, na)?;
            let use_clean = plan.clean_adversary && !ga.is_empty();
            let use_private = plan.private_adversary && !gb.is_empty();

            // (1) adversaries, encoder frozen
            for _ in 0..config.adversary_steps_per_batch {
                if use_clean {
                    adversary_update(&mut model.clean_adversary, &mut opt.clean, &ea, &ga)?;
                }
                if use_private {
                    adversary_update(&mut model.private_adversary, &mut opt.private, &eb, &gb)?;
                }
            }

            // (2) encoder and label head
            let label_pass = model.label_head.forward(e)?;
            let (label_loss, g_label) = cross_entropy_grad(label_pass.output(), &y)?;
            let label_bp = model
                .label_head
                .backward_with_input_grad(&label_pass, &g_label)?;
            let mut enc_grads: GradSet = model.encoder.backward(&enc_pass, &label_bp.input_grad)?;
            label_sum += label_loss;
            n_batches += 1;

            if use_clean {
                let (pass, loss, g) = adversary_loss(&model.clean_adversary, &ea, &ga)?;
                let bp = model.clean_adversary.backward_with_input_grad(&pass, &g)?;
                let full = place_rows(e.rows(), 0, &bp.input_grad);
                let grads = model.encoder.backward(&enc_pass, &full)?;
                enc_grads.add_assign(&reverse_gradient(&grads, beta))?;
                clean_sum += loss;
                n_clean += 1;
            }
            if use_private {
                let (pass, loss, g) = adversary_loss(&model.private_adversary, &eb, &gb)?;
                let bp = model
                    .private_adversary
                    .backward_with_input_grad(&pass, &g)?;
                let full = place_rows(e.rows(), na, &bp.input_grad);
                let grads = model.encoder.backward(&enc_pass, &full)?;
                enc_grads.add_assign(&reverse_gradient(&grads, beta * alpha))?;
                private_sum += loss;
                n_private += 1;
            }

            opt.label
                .step(&mut model.label_head.params, &label_bp.grads)?;
            opt.encoder.step(&mut model.encoder.params, &enc_grads)?;
        }
        let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
        history.push(EpochStats {
            label_loss: label_sum / n_batches.max(1) as f64,
            clean_adversary_loss: mean(clean_sum, n_clean),
            private_adversary_loss: mean(private_sum, n_private),
        });
        if let Some(obs) = observer.as_mut() {
            obs(epoch, &model)?;
        }
    }
    log::debug!("{variant}: trained {} epochs", config.train.epochs);
    Ok(TrainedModel { model, history })
}

/// The full method: clean subset with true attributes plus the private
/// subset with corrected attributes.
pub fn train_fairsp(
    clean: &EncodedDataset,
    corrected: &EncodedDataset,
    config: &DebiasConfig,
) -> Result<FairSpModel> {
    if clean.is_empty() {
        return Err(Error::EmptySplit("clean subset is empty".into()));
    }
    train_with_plan(
        clean,
        corrected,
        TrainerVariant::Fairsp,
        TrainPlan::ADVERSARIAL,
        config,
        None,
    )
    .map(|t| t.model)
}

/// Baselines on a randomized partition. Private attributes are used as
/// observed, without correction.
pub fn train_baseline(
    variant: TrainerVariant,
    partition: &SemiPrivatePartition,
    config: &DebiasConfig,
) -> Result<FairSpModel> {
    let (clean, private) = (&partition.clean, &partition.private);
    let empty = clean.select(&[]);
    let need = |d: &EncodedDataset, what: &str| {
        if d.is_empty() {
            Err(Error::EmptySplit(format!(
                "{variant} needs a non-empty {what} subset"
            )))
        } else {
            Ok(())
        }
    };
    let no_adv = |input| TrainPlan {
        input,
        clean_adversary: false,
        private_adversary: false,
    };
    let single = TrainPlan {
        input: InputMode::Features,
        clean_adversary: true,
        private_adversary: false,
    };
    let trained = match variant {
        TrainerVariant::Vanilla => train_with_plan(
            clean,
            private,
            variant,
            no_adv(InputMode::FeaturesWithAttribute),
            config,
            None,
        ),
        TrainerVariant::RemoveS => train_with_plan(
            clean,
            private,
            variant,
            no_adv(InputMode::Features),
            config,
            None,
        ),
        TrainerVariant::CleanOnly => {
            need(clean, "clean")?;
            train_with_plan(clean, &empty, variant, single, config, None)
        }
        TrainerVariant::PrivateOnly => {
            need(private, "private")?;
            train_with_plan(private, &empty, variant, single, config, None)
        }
        TrainerVariant::CleanPlusPrivate => {
            need(clean, "clean")?;
            train_with_plan(
                clean,
                private,
                variant,
                TrainPlan::ADVERSARIAL,
                config,
                None,
            )
        }
        TrainerVariant::Fairsp => {
            return Err(Error::invalid(
                "fairsp needs corrected attributes; use train_fairsp",
            ));
        }
    }?;
    Ok(trained.model)
}
