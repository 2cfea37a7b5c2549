//! Turns captures into labeled image datasets: parse each frame, label it
//! by source MAC, encode it, and tally every skip by reason.

use std::collections::BTreeMap;
use std::fmt;

use pktimg_core::encoders::{
    encode_lim, encode_lim_sized, encode_lotfollahi, encode_payload784, encode_wang, EncodeSkip,
    LIM_SIZES,
};
use pktimg_core::image::EncoderId;
use pktimg_core::packet::{is_handshake, parse_packet};
use pktimg_core::{ImageDataset, MacLabelMap, PseudoImage};

use crate::pcap::Capture;

/// Packets from an unlisted source MAC are counted under this reason.
pub const SKIP_UNKNOWN_DEVICE: &str = "unknown-device";

/// The pcap-driven encoders. Fingerprint images come from CSV instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderChoice {
    Lim,
    Lotfollahi,
    Wang,
    Payload784,
}

impl EncoderChoice {
    pub const ALL: [EncoderChoice; 4] = [
        EncoderChoice::Lim,
        EncoderChoice::Lotfollahi,
        EncoderChoice::Wang,
        EncoderChoice::Payload784,
    ];

    pub fn id(self) -> EncoderId {
        match self {
            EncoderChoice::Lim => EncoderId::Lim,
            EncoderChoice::Lotfollahi => EncoderId::Lotfollahi,
            EncoderChoice::Wang => EncoderId::Wang,
            EncoderChoice::Payload784 => EncoderId::Payload784,
        }
    }

    pub fn name(self) -> &'static str {
        self.id().name()
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for EncoderChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How lim images are sized: per packet, or pinned to one capacity so the
/// whole capture shares a shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimSizing {
    Auto,
    Fixed(usize),
}

impl LimSizing {
    /// Parses `auto` or one of 36/64/256/1024.
    pub fn from_name(name: &str) -> Option<Self> {
        if name == "auto" {
            return Some(LimSizing::Auto);
        }
        let n: usize = name.parse().ok()?;
        LIM_SIZES.contains(&n).then_some(LimSizing::Fixed(n))
    }
}

/// What happened to every packet of an extraction. The counts always
/// satisfy `packets_read == images_written + sum(skips)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractSummary {
    pub packets_read: usize,
    pub images_written: usize,
    pub skips: BTreeMap<&'static str, usize>,
    /// Images per device class, in label order, zero counts included.
    pub per_class: Vec<(String, usize)>,
}

impl ExtractSummary {
    pub fn skipped_total(&self) -> usize {
        self.skips.values().sum()
    }

    pub fn is_consistent(&self) -> bool {
        self.packets_read == self.images_written + self.skipped_total()
            && self.per_class.iter().map(|(_, n)| n).sum::<usize>() == self.images_written
    }
}

/// Encodes every packet of the given captures into labeled datasets.
///
/// Packets are dropped (and tallied) in this order: frames that do not
/// parse, frames whose source MAC is not in the device map, and packets
/// the encoder skips. With `LimSizing::Auto` the realized image shapes
/// may differ, and one dataset per shape is returned, smallest first;
/// every other configuration yields at most one dataset. Captures with
/// nothing to encode yield an empty vector.
pub fn extract_datasets(
    captures: &[Capture],
    map: &MacLabelMap,
    encoder: EncoderChoice,
    lim: LimSizing,
) -> (Vec<ImageDataset>, ExtractSummary) {
    let mut by_shape: BTreeMap<(u16, u16), ImageDataset> = BTreeMap::new();
    let mut summary = ExtractSummary {
        per_class: map.class_names().iter().map(|n| (n.clone(), 0)).collect(),
        ..ExtractSummary::default()
    };

    for capture in captures {
        for raw in &capture.packets {
            summary.packets_read += 1;
            let packet = match parse_packet(&raw.data, capture.link_type) {
                Ok(p) => p,
                Err(reason) => {
                    *summary.skips.entry(reason.name()).or_insert(0) += 1;
                    continue;
                }
            };
            let Some(label) = map.label_for(packet.src_mac) else {
                *summary.skips.entry(SKIP_UNKNOWN_DEVICE).or_insert(0) += 1;
                continue;
            };
            let image = match encode_one(&packet, encoder, lim) {
                Ok(image) => image,
                Err(skip) => {
                    *summary.skips.entry(skip.name()).or_insert(0) += 1;
                    continue;
                }
            };
            by_shape
                .entry((image.width, image.height))
                .or_insert_with(|| {
                    ImageDataset::new(
                        image.encoder,
                        image.pixel_max,
                        image.width,
                        image.height,
                        map.class_names().to_vec(),
                    )
                })
                .push_image(&image, label)
                .expect("encoded image matches its shape bucket");
            summary.images_written += 1;
            summary.per_class[usize::from(label)].1 += 1;
        }
    }

    debug_assert!(summary.is_consistent());
    (by_shape.into_values().collect(), summary)
}

fn encode_one(
    packet: &pktimg_core::ParsedPacket,
    encoder: EncoderChoice,
    lim: LimSizing,
) -> Result<PseudoImage, EncodeSkip> {
    match encoder {
        EncoderChoice::Lim => {
            let payload = packet.l7_payload();
            if payload.is_empty() {
                return Err(if is_handshake(packet) {
                    EncodeSkip::Handshake
                } else {
                    EncodeSkip::EmptyPayload
                });
            }
            match lim {
                LimSizing::Auto => encode_lim(payload),
                LimSizing::Fixed(size) => encode_lim_sized(payload, size),
            }
        }
        EncoderChoice::Lotfollahi => encode_lotfollahi(packet),
        EncoderChoice::Wang => encode_wang(packet),
        EncoderChoice::Payload784 => encode_payload784(packet),
    }
}
