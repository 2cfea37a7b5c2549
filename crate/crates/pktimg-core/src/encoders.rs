//! The four packet-to-pseudo-image encoding schemes plus the fingerprint
//! (feature-vector) adapter.
//!
//! All encoders are pure functions: identical input bytes give identical
//! pixel sequences on every run and platform. Inputs that carry nothing to
//! encode are skipped with an [`EncodeSkip`] so callers can report why.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::image::{EncoderId, PseudoImage};
use crate::packet::{is_dns, is_handshake, ParsedPacket};

/// Allowed Lim pixel counts, each a perfect square (6, 8, 16, 32 per side).
pub const LIM_SIZES: [usize; 4] = [36, 64, 256, 1024];

/// Capacity of the Lotfollahi image: 37 x 40 pixels.
pub const LOTFOLLAHI_PIXELS: usize = 1480;

/// Capacity of the Wang and payload784 images: 28 x 28 pixels.
pub const PIXELS_784: usize = 784;

/// Pixels of a Wang image that hold the session header rather than payload.
pub const WANG_HEADER_PIXELS: usize = 13;

/// Why a packet produced no image under a given encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodeSkip {
    /// TCP packet without a load (SYN, SYN-ACK, bare ACK, FIN, RST).
    Handshake,
    /// Port 53 traffic, filtered by the Lotfollahi scheme.
    Dns,
    /// Nothing to encode (empty payload on a non-TCP packet, or an empty
    /// byte sequence handed to the nibble encoder).
    EmptyPayload,
    /// The Wang layout mandates 4-byte address slots; IPv6 does not fit.
    Ipv6Unsupported,
}

impl EncodeSkip {
    /// Stable lowercase name used in skip-count summaries.
    pub fn name(self) -> &'static str {
        match self {
            EncodeSkip::Handshake => "handshake",
            EncodeSkip::Dns => "dns",
            EncodeSkip::EmptyPayload => "empty-payload",
            EncodeSkip::Ipv6Unsupported => "ipv6-unsupported",
        }
    }
}

/// Handshakes are reported as such; any other loadless packet is just empty.
fn empty_payload_skip(p: &ParsedPacket) -> EncodeSkip {
    if is_handshake(p) {
        EncodeSkip::Handshake
    } else {
        EncodeSkip::EmptyPayload
    }
}

/// Zero-pads or truncates `bytes` to exactly `capacity`.
fn fit_to_capacity(bytes: &[u8], capacity: usize) -> Vec<u8> {
    let mut pixels = Vec::with_capacity(capacity);
    let take = bytes.len().min(capacity);
    pixels.extend_from_slice(&bytes[..take]);
    pixels.resize(capacity, 0);
    pixels
}

/// Picks the Lim target size closest to a nibble sequence of length `len`,
/// ties going to the smaller size. Threshold form of
/// `argmin |len - T| over {36, 64, 256, 1024}`: the cut points are the
/// midpoints 50, 160, and 640, each belonging to the smaller size.
pub fn lim_target_size(len: usize) -> usize {
    if len <= 50 {
        36
    } else if len <= 160 {
        64
    } else if len <= 640 {
        256
    } else {
        1024
    }
}

fn lim_image(nibbles: &[u8], target: usize) -> PseudoImage {
    debug_assert!(LIM_SIZES.contains(&target));
    let side = match target {
        36 => 6,
        64 => 8,
        256 => 16,
        _ => 32,
    };
    PseudoImage {
        width: side,
        height: side,
        pixels: fit_to_capacity(nibbles, target),
        encoder: EncoderId::Lim,
        pixel_max: 15,
        label: None,
    }
}

/// Splits a payload into nibble pixels (high nibble first, values 0-15) and
/// sizes the image to whichever of 36/64/256/1024 is nearest the nibble
/// count: shorter series are zero-padded, longer ones are cut.
pub fn encode_lim(payload: &[u8]) -> Result<PseudoImage, EncodeSkip> {
    if payload.is_empty() {
        return Err(EncodeSkip::EmptyPayload);
    }
    let nibbles = to_nibbles(payload);
    let target = lim_target_size(nibbles.len());
    Ok(lim_image(&nibbles, target))
}

/// Same nibble encoding but pinned to one of the four sizes, so a whole
/// capture can share a single image shape.
pub fn encode_lim_sized(payload: &[u8], target: usize) -> Result<PseudoImage, EncodeSkip> {
    assert!(
        LIM_SIZES.contains(&target),
        "lim size must be one of {:?}, got {}",
        LIM_SIZES,
        target
    );
    if payload.is_empty() {
        return Err(EncodeSkip::EmptyPayload);
    }
    Ok(lim_image(&to_nibbles(payload), target))
}

fn to_nibbles(payload: &[u8]) -> Vec<u8> {
    let mut nibbles = Vec::with_capacity(payload.len() * 2);
    for &b in payload {
        nibbles.push(b >> 4);
        nibbles.push(b & 0x0F);
    }
    nibbles
}

/// Encodes the IP payload (transport header included) as a 37x40 image,
/// zero-padded or cut to 1480 bytes. DNS and loadless packets are skipped.
pub fn encode_lotfollahi(p: &ParsedPacket) -> Result<PseudoImage, EncodeSkip> {
    if is_dns(p) {
        return Err(EncodeSkip::Dns);
    }
    if is_handshake(p) {
        return Err(EncodeSkip::Handshake);
    }
    if p.ip_payload.is_empty() {
        return Err(EncodeSkip::EmptyPayload);
    }
    Ok(PseudoImage {
        width: 37,
        height: 40,
        pixels: fit_to_capacity(&p.ip_payload, LOTFOLLAHI_PIXELS),
        encoder: EncoderId::Lotfollahi,
        pixel_max: 255,
        label: None,
    })
}

/// Encodes 13 session-header pixels (src IP, dst IP, ports big-endian,
/// protocol) followed by up to 771 application payload bytes as a 28x28
/// image. IPv4 only; loadless packets are skipped.
pub fn encode_wang(p: &ParsedPacket) -> Result<PseudoImage, EncodeSkip> {
    let (src, dst) = match (p.five_tuple.src_ip, p.five_tuple.dst_ip) {
        (core::net::IpAddr::V4(s), core::net::IpAddr::V4(d)) => (s.octets(), d.octets()),
        _ => return Err(EncodeSkip::Ipv6Unsupported),
    };
    let payload = p.l7_payload();
    if payload.is_empty() {
        return Err(empty_payload_skip(p));
    }
    let mut pixels = Vec::with_capacity(PIXELS_784);
    pixels.extend_from_slice(&src);
    pixels.extend_from_slice(&dst);
    pixels.extend_from_slice(&p.five_tuple.src_port.to_be_bytes());
    pixels.extend_from_slice(&p.five_tuple.dst_port.to_be_bytes());
    pixels.push(p.transport.proto_number());
    let body = PIXELS_784 - WANG_HEADER_PIXELS;
    pixels.extend_from_slice(&fit_to_capacity(payload, body));
    Ok(PseudoImage {
        width: 28,
        height: 28,
        pixels,
        encoder: EncoderId::Wang,
        pixel_max: 255,
        label: None,
    })
}

/// Encodes the bare application payload as a 28x28 image, zero-padded or
/// cut to 784 bytes. Packets without a load are skipped.
pub fn encode_payload784(p: &ParsedPacket) -> Result<PseudoImage, EncodeSkip> {
    let payload = p.l7_payload();
    if payload.is_empty() {
        return Err(empty_payload_skip(p));
    }
    Ok(PseudoImage {
        width: 28,
        height: 28,
        pixels: fit_to_capacity(payload, PIXELS_784),
        encoder: EncoderId::Payload784,
        pixel_max: 255,
        label: None,
    })
}

/// A named vector of engineered per-packet features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

/// Per-feature (min, max) ranges used to scale feature values to pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintCalibration {
    ranges: BTreeMap<String, (f64, f64)>,
}

/// Fingerprint encoding failures.
#[derive(Debug, Clone, PartialEq)]
pub enum FingerprintError {
    /// A value has no calibration range.
    UnknownFeature(String),
    /// A feature value is NaN or infinite.
    NonFinite(String),
    /// Calibration input rows disagree on feature names.
    NameMismatch,
    /// No rows to calibrate from.
    Empty,
}

impl fmt::Display for FingerprintError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FingerprintError::UnknownFeature(name) => {
                write!(f, "feature `{name}` has no calibration range")
            }
            FingerprintError::NonFinite(name) => {
                write!(f, "feature `{name}` has a non-finite value")
            }
            FingerprintError::NameMismatch => write!(f, "rows disagree on feature names"),
            FingerprintError::Empty => write!(f, "no feature vectors to calibrate from"),
        }
    }
}

impl core::error::Error for FingerprintError {}

impl FingerprintCalibration {
    /// Observes the per-feature min and max over a set of vectors.
    pub fn fit(rows: &[FeatureVector]) -> Result<Self, FingerprintError> {
        let first = rows.first().ok_or(FingerprintError::Empty)?;
        let mut ranges: BTreeMap<String, (f64, f64)> = BTreeMap::new();
        for row in rows {
            if row.names != first.names {
                return Err(FingerprintError::NameMismatch);
            }
            for (name, &value) in row.names.iter().zip(&row.values) {
                if !value.is_finite() {
                    return Err(FingerprintError::NonFinite(name.clone()));
                }
                let entry = ranges.entry(name.clone()).or_insert((value, value));
                entry.0 = entry.0.min(value);
                entry.1 = entry.1.max(value);
            }
        }
        Ok(Self { ranges })
    }

    pub fn from_ranges(ranges: impl IntoIterator<Item = (String, (f64, f64))>) -> Self {
        Self {
            ranges: ranges.into_iter().collect(),
        }
    }

    pub fn range(&self, name: &str) -> Option<(f64, f64)> {
        self.ranges.get(name).copied()
    }
}

/// Min-max scales each feature to a 0-255 pixel (rounded half-up, a
/// degenerate min == max range maps to 0) and zero-pads the sequence to
/// the smallest perfect square.
pub fn encode_fingerprint(
    v: &FeatureVector,
    calib: &FingerprintCalibration,
) -> Result<PseudoImage, FingerprintError> {
    let mut pixels = Vec::with_capacity(v.values.len());
    for (name, &value) in v.names.iter().zip(&v.values) {
        if !value.is_finite() {
            return Err(FingerprintError::NonFinite(name.clone()));
        }
        let (min, max) = calib
            .range(name)
            .ok_or_else(|| FingerprintError::UnknownFeature(name.clone()))?;
        pixels.push(scale_to_pixel(value, min, max));
    }
    let side = smallest_square_side(pixels.len());
    pixels.resize(side * side, 0);
    Ok(PseudoImage {
        width: side as u16,
        height: side as u16,
        pixels,
        encoder: EncoderId::Fingerprint,
        pixel_max: 255,
        label: None,
    })
}

fn scale_to_pixel(value: f64, min: f64, max: f64) -> u8 {
    if max <= min {
        return 0;
    }
    let t = ((value - min) / (max - min)).clamp(0.0, 1.0);
    crate::math::floor(t * 255.0 + 0.5) as u8
}

fn smallest_square_side(len: usize) -> usize {
    let mut side = 0;
    while side * side < len {
        side += 1;
    }
    side
}
