//! Labeled pseudo-image collections: validation on insert, MAC-based
//! labeling, and a seeded stratified train/test split.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::image::{EncoderId, PseudoImage};

/// One labeled image. Pixels are stored flat, row-major, without shape:
/// the owning dataset fixes width and height for all records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub pixels: Vec<u8>,
    pub label: u16,
}

/// A homogeneous set of labeled images: one encoder, one shape, one
/// class-name table shared by every record.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    pub encoder: EncoderId,
    pub pixel_max: u8,
    pub width: u16,
    pub height: u16,
    pub class_names: Vec<String>,
    pub records: Vec<Record>,
}

/// Dataset construction and splitting failures.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetError {
    WrongPixelCount { expected: usize, got: usize },
    PixelOutOfRange { value: u8, max: u8 },
    LabelOutOfRange { label: u16, classes: usize },
    ShapeMismatch,
    BadTestFraction(f64),
    ClassTooSmall { class: String, count: usize },
    Empty,
    MacConflict { mac: String },
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetError::WrongPixelCount { expected, got } => {
                write!(f, "record has {got} pixels, dataset shape needs {expected}")
            }
            DatasetError::PixelOutOfRange { value, max } => {
                write!(f, "pixel value {value} exceeds the encoder maximum {max}")
            }
            DatasetError::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            DatasetError::ShapeMismatch => {
                write!(f, "image shape or encoder does not match the dataset")
            }
            DatasetError::BadTestFraction(v) => {
                write!(f, "test fraction must lie strictly between 0 and 1, got {v}")
            }
            DatasetError::ClassTooSmall { class, count } => {
                write!(f, "class `{class}` has only {count} record(s), need at least 2 to split")
            }
            DatasetError::Empty => write!(f, "dataset holds no records"),
            DatasetError::MacConflict { mac } => {
                write!(f, "MAC {mac} is mapped to more than one device name")
            }
        }
    }
}

impl core::error::Error for DatasetError {}

impl ImageDataset {
    pub fn new(
        encoder: EncoderId,
        pixel_max: u8,
        width: u16,
        height: u16,
        class_names: Vec<String>,
    ) -> Self {
        Self {
            encoder,
            pixel_max,
            width,
            height,
            class_names,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn pixels_per_record(&self) -> usize {
        usize::from(self.width) * usize::from(self.height)
    }

    /// Validates and appends a record.
    pub fn push(&mut self, pixels: Vec<u8>, label: u16) -> Result<(), DatasetError> {
        if pixels.len() != self.pixels_per_record() {
            return Err(DatasetError::WrongPixelCount {
                expected: self.pixels_per_record(),
                got: pixels.len(),
            });
        }
        if let Some(&value) = pixels.iter().find(|&&px| px > self.pixel_max) {
            return Err(DatasetError::PixelOutOfRange {
                value,
                max: self.pixel_max,
            });
        }
        if usize::from(label) >= self.class_names.len() {
            return Err(DatasetError::LabelOutOfRange {
                label,
                classes: self.class_names.len(),
            });
        }
        self.records.push(Record { pixels, label });
        Ok(())
    }

    /// Appends an encoded image, checking that its shape and encoder agree
    /// with the dataset.
    pub fn push_image(&mut self, image: &PseudoImage, label: u16) -> Result<(), DatasetError> {
        if image.width != self.width
            || image.height != self.height
            || image.encoder != self.encoder
            || image.pixel_max != self.pixel_max
        {
            return Err(DatasetError::ShapeMismatch);
        }
        self.push(image.pixels.clone(), label)
    }

    /// Number of records per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; self.class_names.len()];
        for r in &self.records {
            counts[usize::from(r.label)] += 1;
        }
        counts
    }

    fn like_empty(&self) -> Self {
        Self {
            encoder: self.encoder,
            pixel_max: self.pixel_max,
            width: self.width,
            height: self.height,
            class_names: self.class_names.clone(),
            records: Vec::new(),
        }
    }

    /// Splits into (train, test) with a per-class quota: each class sends
    /// `ceil(count * test_fraction)` records to the test side, chosen by a
    /// seeded shuffle. The same seed always yields the same split.
    pub fn split_stratified(
        &self,
        test_fraction: f64,
        seed: u64,
    ) -> Result<(Self, Self), DatasetError> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(DatasetError::BadTestFraction(test_fraction));
        }
        if self.records.is_empty() {
            return Err(DatasetError::Empty);
        }
        let counts = self.class_counts();
        for (label, &count) in counts.iter().enumerate() {
            if count < 2 {
                return Err(DatasetError::ClassTooSmall {
                    class: self.class_names[label].clone(),
                    count,
                });
            }
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut train = self.like_empty();
        let mut test = self.like_empty();
        for label in 0..self.class_names.len() {
            let mut indices: Vec<usize> = self
                .records
                .iter()
                .enumerate()
                .filter(|(_, r)| usize::from(r.label) == label)
                .map(|(i, _)| i)
                .collect();
            indices.shuffle(&mut rng);
            let quota = crate::math::ceil(indices.len() as f64 * test_fraction) as usize;
            for (rank, &i) in indices.iter().enumerate() {
                let side = if rank < quota { &mut test } else { &mut train };
                side.records.push(self.records[i].clone());
            }
        }
        Ok((train, test))
    }
}

/// Maps source MAC addresses to device class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacLabelMap {
    labels: BTreeMap<[u8; 6], u16>,
    class_names: Vec<String>,
}

impl MacLabelMap {
    /// Builds a map from (MAC, device name) pairs. Device names are sorted
    /// and deduplicated, so label ids do not depend on pair order. A MAC
    /// listed twice with the same name is fine; conflicting names are not.
    pub fn from_pairs(
        pairs: impl IntoIterator<Item = ([u8; 6], String)>,
    ) -> Result<Self, DatasetError> {
        let mut by_mac: BTreeMap<[u8; 6], String> = BTreeMap::new();
        for (mac, name) in pairs {
            if let Some(existing) = by_mac.get(&mac) {
                if *existing != name {
                    return Err(DatasetError::MacConflict {
                        mac: format_mac(mac),
                    });
                }
            } else {
                by_mac.insert(mac, name);
            }
        }
        let mut class_names: Vec<String> = by_mac.values().cloned().collect();
        class_names.sort();
        class_names.dedup();
        let labels = by_mac
            .into_iter()
            .map(|(mac, name)| {
                let id = class_names.binary_search(&name).expect("name was collected") as u16;
                (mac, id)
            })
            .collect();
        Ok(Self {
            labels,
            class_names,
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Label for a source MAC, or None if the device is unknown.
    pub fn label_for(&self, mac: [u8; 6]) -> Option<u16> {
        self.labels.get(&mac).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Parses `aa:bb:cc:dd:ee:ff` (case-insensitive, `-` also accepted).
pub fn parse_mac(text: &str) -> Option<[u8; 6]> {
    let mut mac = [0u8; 6];
    let mut parts = text.split([':', '-']);
    for slot in &mut mac {
        let part = parts.next()?;
        if part.len() != 2 {
            return None;
        }
        *slot = u8::from_str_radix(part, 16).ok()?;
    }
    if parts.next().is_some() {
        return None;
    }
    Some(mac)
}

/// Renders a MAC in the canonical lowercase colon form.
pub fn format_mac(mac: [u8; 6]) -> String {
    use fmt::Write;
    let mut out = String::with_capacity(17);
    for (i, b) in mac.iter().enumerate() {
        if i > 0 {
            out.push(':');
        }
        let _ = write!(out, "{b:02x}");
    }
    out
}
