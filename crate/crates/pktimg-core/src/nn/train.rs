//! Mini-batch SGD over an [`ImageDataset`]. One seed fixes the weight
//! init and every epoch shuffle, so two runs with equal inputs produce
//! bit-identical models.

use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::dataset::ImageDataset;
use crate::nn::model::{argmax_tie_smallest, CnnModel, ModelConfig, ModelError, Params};

/// SGD hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 32,
            epochs: 20,
            seed: 42,
        }
    }
}

/// Mean loss and running accuracy of one pass over the training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub accuracy: f64,
}

/// Predictions of a model over a dataset, in record order.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub predictions: Vec<u16>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    Model(ModelError),
    EmptyDataset,
    BadLearningRate(f64),
    ZeroBatch,
    ZeroEpochs,
    /// Model and dataset disagree on shape, pixel range, or class count.
    DatasetMismatch,
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Model(e) => write!(f, "{e}"),
            TrainError::EmptyDataset => write!(f, "cannot train on an empty dataset"),
            TrainError::BadLearningRate(lr) => {
                write!(f, "learning rate must be positive and finite, got {lr}")
            }
            TrainError::ZeroBatch => write!(f, "batch size must be at least 1"),
            TrainError::ZeroEpochs => write!(f, "epoch count must be at least 1"),
            TrainError::DatasetMismatch => {
                write!(f, "dataset shape does not match the model configuration")
            }
        }
    }
}

impl core::error::Error for TrainError {}

impl From<ModelError> for TrainError {
    fn from(e: ModelError) -> Self {
        TrainError::Model(e)
    }
}

impl ModelConfig {
    /// Geometry and class count taken from a dataset.
    pub fn for_dataset(ds: &ImageDataset) -> Self {
        Self {
            width: ds.width,
            height: ds.height,
            classes: ds.class_names.len() as u16,
            pixel_max: ds.pixel_max,
        }
    }
}

fn check_hyper(tc: &TrainConfig) -> Result<(), TrainError> {
    if !(tc.learning_rate > 0.0 && tc.learning_rate.is_finite()) {
        return Err(TrainError::BadLearningRate(tc.learning_rate));
    }
    if tc.batch_size == 0 {
        return Err(TrainError::ZeroBatch);
    }
    if tc.epochs == 0 {
        return Err(TrainError::ZeroEpochs);
    }
    Ok(())
}

/// Trains a fresh model on `ds`. Returns the model and per-epoch stats.
pub fn train(ds: &ImageDataset, tc: &TrainConfig) -> Result<(CnnModel, Vec<EpochStats>), TrainError> {
    check_hyper(tc)?;
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let config = ModelConfig::for_dataset(ds);
    let mut rng = ChaCha12Rng::seed_from_u64(tc.seed);
    let mut model = CnnModel::init_with_rng(config, &mut rng)?;

    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut history = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(tc.batch_size) {
            let mut grads = model.zero_grads();
            for &i in batch {
                let record = &ds.records[i];
                let (loss, g) = model.grads(&record.pixels, record.label);
                loss_sum += loss;
                if argmax_from_grads_label(&g, record.label) {
                    correct += 1;
                }
                grads.add_scaled(&g, 1.0);
            }
            let scale = -tc.learning_rate / batch.len() as f64;
            model.params.add_scaled(&grads, scale);
        }
        history.push(EpochStats {
            epoch,
            mean_loss: loss_sum / ds.len() as f64,
            accuracy: correct as f64 / ds.len() as f64,
        });
    }
    Ok((model, history))
}

/// The final bias gradient equals probs minus the one-hot target, so
/// adding 1 back at the label recovers the class probabilities without a
/// second forward pass.
fn argmax_from_grads_label(g: &Params, label: u16) -> bool {
    let mut probs: Vec<f64> = g.fc2_b.clone();
    probs[usize::from(label)] += 1.0;
    argmax_tie_smallest(&probs) == usize::from(label)
}

/// Runs the model over every record and scores accuracy.
pub fn evaluate(model: &CnnModel, ds: &ImageDataset) -> Result<Evaluation, TrainError> {
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let config = ModelConfig::for_dataset(ds);
    if config != model.config {
        return Err(TrainError::DatasetMismatch);
    }
    let mut predictions = Vec::with_capacity(ds.len());
    let mut correct = 0usize;
    for record in &ds.records {
        let pred = model.predict(&record.pixels);
        if pred == record.label {
            correct += 1;
        }
        predictions.push(pred);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / ds.len() as f64,
        predictions,
    })
}
