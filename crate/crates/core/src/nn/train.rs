use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::backprop::{batch_backward_with_outputs, Objective};
use super::model::{InputNorm, ModelParams, DEFAULT_LAYER_SIZES};
use crate::datagen::Sample;
use crate::du_loss::{MCConfig, DEFAULT_K_TRAIN};
use crate::error::{Error, Result};
use crate::metrics::argmax;
use crate::seed;

/// Which loss the network is trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "ce")]
    CrossEntropy,
    #[serde(rename = "du")]
    DataUncertainty,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::CrossEntropy => "ce",
            LossKind::DataUncertainty => "du",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(LossKind::CrossEntropy),
            "du" => Ok(LossKind::DataUncertainty),
            other => Err(Error::invalid(format!("unknown loss kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub loss: LossKind,
    /// Noise draws per sample for the DU loss.
    pub k_train: usize,
    pub antithetic: bool,
    /// Standardize inputs with training-set mean and deviation.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            layer_sizes: DEFAULT_LAYER_SIZES.to_vec(),
            learning_rate: 1e-4,
            epochs: 20,
            batch_size: 512,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            loss: LossKind::CrossEntropy,
            k_train: DEFAULT_K_TRAIN,
            antithetic: true,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // lr = 0 is allowed: it freezes the network at its initialization
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.loss == LossKind::DataUncertainty && self.k_train == 0 {
            return Err(Error::invalid("k_train must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-sample loss over the epoch's batches.
    pub loss: f64,
    /// Accuracy of the argmax prediction on the batches as they were seen.
    pub train_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
}

/// Stack sample features into a matrix.
pub fn feature_matrix(samples: &[Sample]) -> Result<Array2<f64>> {
    let width = samples.first().map_or(0, |s| s.features.len());
    let mut out = Array2::zeros((samples.len(), width));
    for (mut row, s) in out.axis_iter_mut(Axis(0)).zip(samples) {
        if s.features.len() != width {
            return Err(Error::invalid("samples have differing feature counts"));
        }
        row.assign(&ndarray::aview1(&s.features));
    }
    Ok(out)
}

/// Render the per-epoch log as CSV.
pub fn log_csv(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch,loss,train_acc\n");
    for e in log {
        out.push_str(&format!("{},{},{}\n", e.epoch, e.loss, e.train_acc));
    }
    out
}

/// Train a fresh network from `config.seed`.
pub fn train(dataset: &[Sample], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let du_head = config.loss == LossKind::DataUncertainty;
    let params = ModelParams::init(&config.layer_sizes, du_head, config.seed)?;
    train_from(params, dataset, config)
}

/// Continue training from the given parameters. The input normalization is
/// refit when `config.standardize` is set.
pub fn train_from(
    mut params: ModelParams,
    dataset: &[Sample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    if let Some(bad) = dataset.iter().position(|s| s.features.len() != params.input_width()) {
        return Err(Error::invalid(format!(
            "sample {bad} has {} features, network expects {}",
            dataset[bad].features.len(),
            params.input_width()
        )));
    }
    if dataset.iter().any(|s| s.label >= params.classes()) {
        return Err(Error::invalid("label out of range for the network"));
    }

    let features = feature_matrix(dataset)?;
    let labels: Vec<usize> = dataset.iter().map(|s| s.label).collect();
    if config.standardize {
        params.input_norm = Some(InputNorm::fit(features.view()));
    }

    let adam = config.adam();
    let mut states: Vec<(AdamState, AdamState)> = params
        .layers
        .iter()
        .map(|l| (AdamState::new(l.weight.len()), AdamState::new(l.bias.len())))
        .collect();

    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut rng = seed::stream(config.seed, &[seed::SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let xs = features.select(Axis(0), chunk);
            let ys: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let objectives: Vec<Objective> = chunk
                .iter()
                .map(|&i| match config.loss {
                    LossKind::CrossEntropy => Objective::CrossEntropy,
                    LossKind::DataUncertainty => Objective::DataUncertainty(MCConfig {
                        k: config.k_train,
                        seed: seed::derive(
                            config.seed,
                            &[seed::TRAIN_NOISE, epoch as u64, batch_idx as u64, i as u64],
                        ),
                        antithetic: config.antithetic,
                    }),
                })
                .collect();
            let (loss, grads, out) =
                batch_backward_with_outputs(&params, xs.view(), &ys, &objectives)?;
            loss_sum += loss * chunk.len() as f64;
            let classes = params.classes();
            correct += out
                .axis_iter(Axis(0))
                .zip(&ys)
                .filter(|(row, &y)| argmax(&row.as_slice().expect("contiguous")[..classes]) == y)
                .count();

            for ((layer, grad), (ws, bs)) in params
                .layers
                .iter_mut()
                .zip(&grads.layers)
                .zip(&mut states)
            {
                ws.step(
                    layer.weight.as_slice_mut().expect("standard layout"),
                    grad.weight.as_slice().expect("standard layout"),
                    &adam,
                );
                bs.step(
                    layer.bias.as_slice_mut().expect("standard layout"),
                    grad.bias.as_slice().expect("standard layout"),
                    &adam,
                );
            }
        }
        if !params.is_finite() {
            return Err(Error::NumericDomain(format!(
                "parameters diverged in epoch {}",
                epoch + 1
            )));
        }
        log.push(EpochLog {
            epoch: epoch + 1,
            loss: loss_sum / n as f64,
            train_acc: correct as f64 / n as f64,
        });
    }
    Ok(TrainOutcome { params, log })
}
