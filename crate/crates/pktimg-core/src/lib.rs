//! Core algorithms for identifying IoT devices from their network traffic.
//!
//! Everything in this crate is pure computation over in-memory data:
//! decoding Ethernet/IP/TCP/UDP frames, turning packet payloads (or
//! engineered feature vectors) into small grayscale pseudo-images,
//! labelling and splitting image datasets, training a small deterministic
//! convolutional network on them, and comparing accuracy samples with the
//! Mann-Whitney U test.
//!
//! File IO, capture-file parsing, and the command line live in the
//! companion `pktimg` crate. This crate is `no_std` (with `alloc`) so the
//! algorithms stay free of platform dependencies and hidden entropy.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod encoders;
pub mod image;
mod math;
pub mod nn;
pub mod packet;
pub mod stats;
pub mod tensor;

pub use dataset::{ImageDataset, MacLabelMap};
pub use encoders::FeatureVector;
pub use image::{EncoderId, PseudoImage};
pub use nn::{CnnModel, ModelConfig};
pub use packet::{FiveTuple, ParsedPacket, Transport};
pub use tensor::Tensor;
