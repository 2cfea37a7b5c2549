//! Model checkpoints: magic "PCNN", version 1, little-endian.
//!
//! Layout: magic (4 bytes), version u16, then the config block (width u16,
//! height u16, classes u16, pixel_max u8, epochs u32, batch u32, seed u64,
//! learning rate f64), then the eight parameter tensors in declaration
//! order, each as a rank u8, u32 dimensions, and f64 values. Round-trips
//! are bit-exact.

use std::fs;
use std::path::Path;

use pktimg_core::nn::model::{CONV1_CHANNELS, CONV2_CHANNELS, HIDDEN, KERNEL};
use pktimg_core::nn::{CnnModel, ModelConfig, Params, TrainConfig};

use crate::bytesio::{ByteReader, NeedBytes};

pub const MODEL_MAGIC: &[u8; 4] = b"PCNN";
pub const MODEL_VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("cannot access model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("offset 0: bad magic {0:02x?}, expected \"PCNN\"")]
    BadMagic([u8; 4]),
    #[error("offset 4: unsupported model version {0}, expected {MODEL_VERSION}")]
    BadVersion(u16),
    #[error("offset {offset}: file truncated, needed {needed} more byte(s) for {what}")]
    Truncated {
        offset: usize,
        needed: usize,
        what: &'static str,
    },
    #[error("tensor {tensor}: stored shape {got:?} does not match expected {expected:?}")]
    ShapeMismatch {
        tensor: &'static str,
        expected: Vec<u32>,
        got: Vec<u32>,
    },
    #[error("tensor {tensor}: value {index} is not finite")]
    NonFinite { tensor: &'static str, index: usize },
    #[error("stored configuration is invalid: {0}")]
    BadConfig(String),
    #[error("offset {offset}: {extra} trailing byte(s) after the last tensor")]
    TrailingBytes { offset: usize, extra: usize },
}

fn truncated(what: &'static str) -> impl Fn(NeedBytes) -> CheckpointError {
    move |e| CheckpointError::Truncated {
        offset: e.offset,
        needed: e.needed,
        what,
    }
}

/// Tensor shapes in declaration order for a given geometry.
fn expected_shapes(config: &ModelConfig) -> [Vec<u32>; 8] {
    let k = KERNEL as u32;
    let c1 = CONV1_CHANNELS as u32;
    let c2 = CONV2_CHANNELS as u32;
    let hidden = HIDDEN as u32;
    let flat = config.flat_features() as u32;
    let classes = u32::from(config.classes);
    [
        vec![c1, k, k, 1],
        vec![c1],
        vec![c2, k, k, c1],
        vec![c2],
        vec![hidden, flat],
        vec![hidden],
        vec![classes, hidden],
        vec![classes],
    ]
}

/// Serializes a model plus the hyperparameters it was trained with.
pub fn model_to_bytes(model: &CnnModel, train: &TrainConfig) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&model.config.width.to_le_bytes());
    out.extend_from_slice(&model.config.height.to_le_bytes());
    out.extend_from_slice(&model.config.classes.to_le_bytes());
    out.push(model.config.pixel_max);
    out.extend_from_slice(&(train.epochs as u32).to_le_bytes());
    out.extend_from_slice(&(train.batch_size as u32).to_le_bytes());
    out.extend_from_slice(&train.seed.to_le_bytes());
    out.extend_from_slice(&train.learning_rate.to_bits().to_le_bytes());
    for (slice, shape) in model.params.slices().into_iter().zip(expected_shapes(&model.config)) {
        out.push(shape.len() as u8);
        for dim in &shape {
            out.extend_from_slice(&dim.to_le_bytes());
        }
        debug_assert_eq!(slice.len() as u32, shape.iter().product::<u32>());
        for value in slice {
            out.extend_from_slice(&value.to_bits().to_le_bytes());
        }
    }
    out
}

/// Parses a model file image, validating shapes against the configuration.
pub fn model_from_bytes(bytes: &[u8]) -> Result<(CnnModel, TrainConfig), CheckpointError> {
    let mut r = ByteReader::new(bytes);
    let magic: [u8; 4] = r.take(4).map_err(truncated("magic"))?.try_into().unwrap();
    if &magic != MODEL_MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let version = r.u16_le().map_err(truncated("version"))?;
    if version != MODEL_VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let config = ModelConfig {
        width: r.u16_le().map_err(truncated("width"))?,
        height: r.u16_le().map_err(truncated("height"))?,
        classes: r.u16_le().map_err(truncated("classes"))?,
        pixel_max: r.u8().map_err(truncated("pixel_max"))?,
    };
    config
        .validate()
        .map_err(|e| CheckpointError::BadConfig(e.to_string()))?;
    let train = TrainConfig {
        epochs: r.u32_le().map_err(truncated("epochs"))? as usize,
        batch_size: r.u32_le().map_err(truncated("batch size"))? as usize,
        seed: r.u64_le().map_err(truncated("seed"))?,
        learning_rate: r.f64_le().map_err(truncated("learning rate"))?,
    };

    // start from a zero-seeded skeleton and overwrite every tensor
    let mut model = CnnModel::new(config, 0)
        .map_err(|e| CheckpointError::BadConfig(e.to_string()))?;
    let names = Params::names();
    for (slot, (slice, expected)) in model
        .params
        .slices_mut()
        .into_iter()
        .zip(expected_shapes(&config))
        .enumerate()
    {
        let tensor = names[slot];
        let rank = r.u8().map_err(truncated("tensor rank"))?;
        let mut got = Vec::with_capacity(usize::from(rank));
        for _ in 0..rank {
            got.push(r.u32_le().map_err(truncated("tensor dimension"))?);
        }
        if got != expected {
            return Err(CheckpointError::ShapeMismatch {
                tensor,
                expected,
                got,
            });
        }
        for (index, value) in slice.iter_mut().enumerate() {
            *value = r.f64_le().map_err(truncated("tensor value"))?;
            if !value.is_finite() {
                return Err(CheckpointError::NonFinite { tensor, index });
            }
        }
    }
    if r.remaining() > 0 {
        return Err(CheckpointError::TrailingBytes {
            offset: r.offset(),
            extra: r.remaining(),
        });
    }
    Ok((model, train))
}

pub fn save_model(
    model: &CnnModel,
    train: &TrainConfig,
    path: impl AsRef<Path>,
) -> Result<(), CheckpointError> {
    fs::write(path, model_to_bytes(model, train))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(CnnModel, TrainConfig), CheckpointError> {
    model_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (CnnModel, TrainConfig) {
        let config = ModelConfig {
            width: 12,
            height: 12,
            classes: 3,
            pixel_max: 255,
        };
        let train = TrainConfig {
            learning_rate: 0.0375,
            batch_size: 16,
            epochs: 7,
            seed: 99,
        };
        (CnnModel::new(config, 99).unwrap(), train)
    }

    #[test]
    fn header_is_frozen() {
        let (model, train) = sample();
        let bytes = model_to_bytes(&model, &train);
        assert_eq!(&bytes[..4], b"PCNN");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..8], &[12, 0]); // width
        assert_eq!(&bytes[8..10], &[12, 0]); // height
        assert_eq!(&bytes[10..12], &[3, 0]); // classes
        assert_eq!(bytes[12], 255); // pixel_max
        assert_eq!(&bytes[13..17], &7u32.to_le_bytes()); // epochs
        assert_eq!(&bytes[17..21], &16u32.to_le_bytes()); // batch
        assert_eq!(&bytes[21..29], &99u64.to_le_bytes()); // seed
        assert_eq!(&bytes[29..37], &0.0375f64.to_bits().to_le_bytes());
        // first tensor: rank 4, dims [8, 3, 3, 1]
        assert_eq!(bytes[37], 4);
        assert_eq!(&bytes[38..54], {
            let mut dims = Vec::new();
            for d in [8u32, 3, 3, 1] {
                dims.extend_from_slice(&d.to_le_bytes());
            }
            dims
        }.as_slice());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (model, train) = sample();
        let bytes = model_to_bytes(&model, &train);
        let (back, train_back) = model_from_bytes(&bytes).unwrap();
        assert_eq!(back.config, model.config);
        assert_eq!(train_back, train);
        for (a, b) in back.params.slices().into_iter().zip(model.params.slices()) {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(model_to_bytes(&back, &train_back), bytes);
    }

    #[test]
    fn loaded_model_predicts_identically() {
        let (model, train) = sample();
        let (back, _) = model_from_bytes(&model_to_bytes(&model, &train)).unwrap();
        for trial in 0..20u8 {
            let pixels: Vec<u8> = (0..144).map(|i| (i as u8).wrapping_mul(trial + 1)).collect();
            assert_eq!(model.predict(&pixels), back.predict(&pixels));
            assert_eq!(model.probabilities(&pixels), back.probabilities(&pixels));
        }
    }

    #[test]
    fn rejects_corruption() {
        let (model, train) = sample();
        let bytes = model_to_bytes(&model, &train);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            model_from_bytes(&bad).unwrap_err(),
            CheckpointError::BadMagic(_)
        ));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(
            model_from_bytes(&bad).unwrap_err(),
            CheckpointError::BadVersion(2)
        ));

        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(
            model_from_bytes(cut).unwrap_err(),
            CheckpointError::Truncated { .. }
        ));

        let mut padded = bytes.clone();
        padded.push(0);
        assert!(matches!(
            model_from_bytes(&padded).unwrap_err(),
            CheckpointError::TrailingBytes { .. }
        ));
    }

    #[test]
    fn rejects_shape_mismatch() {
        let (model, train) = sample();
        let mut bytes = model_to_bytes(&model, &train);
        // first dim of conv1_w (offset 38) claims 9 channels instead of 8
        bytes[38] = 9;
        match model_from_bytes(&bytes).unwrap_err() {
            CheckpointError::ShapeMismatch { tensor, got, .. } => {
                assert_eq!(tensor, "conv1_w");
                assert_eq!(got[0], 9);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_undersized_geometry() {
        let (model, train) = sample();
        let mut bytes = model_to_bytes(&model, &train);
        bytes[6] = 4; // width 4 cannot pass through two conv+pool stages
        assert!(matches!(
            model_from_bytes(&bytes).unwrap_err(),
            CheckpointError::BadConfig(_)
        ));
    }

    #[test]
    fn rejects_non_finite_parameters() {
        let (mut model, train) = sample();
        model.params.slices_mut()[0][5] = f64::NAN;
        let bytes = model_to_bytes(&model, &train);
        match model_from_bytes(&bytes).unwrap_err() {
            CheckpointError::NonFinite { tensor, index } => {
                assert_eq!((tensor, index), ("conv1_w", 5));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
