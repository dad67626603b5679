//! Deterministic training loops: seeded shuffling, instance-at-a-time
//! forward/backward with gradient accumulation, global-norm clipping, one
//! Adam step per batch, early stopping on dev micro-F1, and best-model
//! retention.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::error::{Result, SercError};
use crate::eval::ConfusionMatrix;
use crate::features::EncodedInstance;
use crate::model::{JointModel, SercModel};
use crate::nn::{AdamConfig, AdamState, Gradients, ParamAccess, Scalar};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Gradient-accumulation count: one optimizer step per this many
    /// instances (the final partial batch of an epoch also steps).
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    pub grad_clip_norm: f64,
    /// Epochs without a dev micro-F1 improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Optional per-class loss weights, indexed by label id.
    pub class_weights: Option<Vec<f64>>,
    /// Joint training only: train the encoders along with the head.
    pub unfreeze: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            batch_size: 16,
            optimizer: AdamConfig::default(),
            grad_clip_norm: 5.0,
            patience: 10,
            seed: 0,
            class_weights: None,
            unfreeze: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs < 1 || self.batch_size < 1 || self.patience < 1 {
            return Err(SercError::Config(
                "max_epochs, batch_size, and patience must all be >= 1".into(),
            ));
        }
        if !self.grad_clip_norm.is_finite() || self.grad_clip_norm <= 0.0 {
            return Err(SercError::Config("grad_clip_norm must be positive".into()));
        }
        Ok(())
    }
}

/// One line of the training history (serialized as JSON Lines).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// Percentage in [0, 100].
    pub train_accuracy: f64,
    /// Percentage in [0, 100]; absent when no dev set was given.
    pub dev_micro_f1: Option<f64>,
    pub seconds: f64,
}

impl EpochStats {
    /// Equality over everything except wall-clock time.
    pub fn same_metrics(&self, other: &EpochStats) -> bool {
        self.epoch == other.epoch
            && self.train_loss == other.train_loss
            && self.train_accuracy == other.train_accuracy
            && self.dev_micro_f1 == other.dev_micro_f1
    }
}

/// What the shared loop needs from a model.
pub trait TrainableModel<F: Scalar>: ParamAccess<F> + Clone {
    fn instance_loss(
        &self,
        x: &EncodedInstance<F>,
        weight: F,
        grads: &mut Gradients<F>,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(F, usize)>;
    fn predict_id(&self, x: &EncodedInstance<F>) -> Result<usize>;
    fn label_set(&self) -> &LabelSet;
    fn uses_dropout(&self) -> bool {
        false
    }
}

impl<F: Scalar> TrainableModel<F> for SercModel<F> {
    fn instance_loss(
        &self,
        x: &EncodedInstance<F>,
        weight: F,
        grads: &mut Gradients<F>,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(F, usize)> {
        self.loss_and_grads(x, weight, grads, dropout_rng)
    }

    fn predict_id(&self, x: &EncodedInstance<F>) -> Result<usize> {
        let (probs, _) = self.forward(x)?;
        Ok(crate::model::argmax(&probs))
    }

    fn label_set(&self) -> &LabelSet {
        &self.labels
    }

    fn uses_dropout(&self) -> bool {
        self.config.dropout > 0.0
    }
}

impl<F: Scalar> TrainableModel<F> for JointModel<F> {
    fn instance_loss(
        &self,
        x: &EncodedInstance<F>,
        weight: F,
        grads: &mut Gradients<F>,
        _dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(F, usize)> {
        self.loss_and_grads(x, weight, grads)
    }

    fn predict_id(&self, x: &EncodedInstance<F>) -> Result<usize> {
        let probs = self.forward(x)?;
        Ok(crate::model::argmax(&probs))
    }

    fn label_set(&self) -> &LabelSet {
        &self.causal.labels
    }
}

fn dev_micro_f1<F: Scalar, M: TrainableModel<F>>(
    model: &M,
    dev: &[EncodedInstance<F>],
) -> Result<f64> {
    let mut cm = ConfusionMatrix::new(model.label_set().clone());
    for x in dev {
        cm.add(x.label_id, model.predict_id(x)?)?;
    }
    Ok(100.0 * cm.correct() as f64 / cm.total() as f64)
}

fn instance_weight<F: Scalar>(cfg: &TrainConfig, x: &EncodedInstance<F>) -> Result<F> {
    match &cfg.class_weights {
        None => Ok(F::one()),
        Some(w) => w
            .get(x.label_id)
            .map(|v| F::from_f64(*v))
            .ok_or_else(|| {
                SercError::Config(format!(
                    "class_weights has {} entries but saw label id {}",
                    w.len(),
                    x.label_id
                ))
            }),
    }
}

/// Shared epoch loop. Returns the history; `model` holds the parameters of
/// the best dev epoch (or of the final epoch when `dev` is empty).
fn run_loop<F: Scalar, M: TrainableModel<F>>(
    model: &mut M,
    train: &[EncodedInstance<F>],
    dev: &[EncodedInstance<F>],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(SercError::validation("training set is empty"));
    }
    if let Some(w) = &cfg.class_weights {
        if w.len() != model.label_set().len() {
            return Err(SercError::Config(format!(
                "{} class weights for {} classes",
                w.len(),
                model.label_set().len()
            )));
        }
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = model
        .uses_dropout()
        .then(|| ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5EED)));
    let mut adam = AdamState::new();
    let mut grads = Gradients::new();
    let clip = F::from_f64(cfg.grad_clip_norm);

    let mut history = Vec::new();
    let mut best: Option<(f64, M)> = None;
    let mut stale_epochs = 0usize;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.max_epochs {
        let start = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0f64;
        let mut correct = 0usize;
        let mut pending = 0usize;
        for (k, &i) in order.iter().enumerate() {
            let x = &train[i];
            let weight = instance_weight(cfg, x)?;
            let (loss, pred) = model.instance_loss(x, weight, &mut grads, dropout_rng.as_mut())?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(SercError::Numerical(format!(
                    "non-finite loss at training instance {i} (epoch {epoch})"
                )));
            }
            loss_sum += loss;
            if pred == x.label_id {
                correct += 1;
            }
            pending += 1;
            if pending == cfg.batch_size || k == order.len() - 1 {
                grads.clip_global_norm(clip);
                if !grads.all_finite() {
                    return Err(SercError::Numerical(format!(
                        "non-finite gradient in the batch ending at instance {i} (epoch {epoch})"
                    )));
                }
                adam.step(model, &grads, &cfg.optimizer)?;
                grads.clear();
                pending = 0;
            }
        }

        let dev_f1 = if dev.is_empty() {
            None
        } else {
            Some(dev_micro_f1(model, dev)?)
        };
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: 100.0 * correct as f64 / train.len() as f64,
            dev_micro_f1: dev_f1,
            seconds: start.elapsed().as_secs_f64(),
        });

        if let Some(f1) = dev_f1 {
            let improved = best.as_ref().map_or(true, |(b, _)| f1 > *b);
            if improved {
                best = Some((f1, model.clone()));
                stale_epochs = 0;
            } else {
                stale_epochs += 1;
                if stale_epochs >= cfg.patience {
                    break;
                }
            }
        }
    }

    if let Some((_, snapshot)) = best {
        *model = snapshot;
    }
    Ok(history)
}

/// Train a single-task model in place. With a non-empty dev set, the model
/// ends at its best dev micro-F1 epoch and training stops early after
/// `patience` epochs without improvement.
pub fn train<F: Scalar>(
    model: &mut SercModel<F>,
    train_set: &[EncodedInstance<F>],
    dev_set: &[EncodedInstance<F>],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    run_loop(model, train_set, dev_set, cfg)
}

/// Train a joint model in place. `cfg.unfreeze` overrides the model's frozen
/// flag; with frozen encoders only the head tensors receive updates.
pub fn train_joint<F: Scalar>(
    model: &mut JointModel<F>,
    train_set: &[EncodedInstance<F>],
    dev_set: &[EncodedInstance<F>],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    model.frozen = !cfg.unfreeze;
    run_loop(model, train_set, dev_set, cfg)
}

/// History as JSON Lines, one epoch per line.
pub fn history_to_jsonl(history: &[EpochStats]) -> Result<String> {
    let mut out = String::new();
    for stats in history {
        out.push_str(&serde_json::to_string(stats)?);
        out.push('\n');
    }
    Ok(out)
}
