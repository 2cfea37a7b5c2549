//! A small convolutional classifier with deterministic, seeded training.

pub mod layers;
pub mod model;
pub mod train;

pub use model::{CnnModel, ModelConfig, ModelError, Params, MIN_INPUT_SIDE};
pub use train::{evaluate, train, EpochStats, Evaluation, TrainConfig, TrainError};
