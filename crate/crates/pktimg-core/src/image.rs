//! The pseudo-image type shared by every encoder.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Which encoding scheme produced a pseudo-image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncoderId {
    /// Payload nibbles as 0-15 pixels, sized to 36/64/256/1024.
    Lim,
    /// IP payload zero-padded or cut to 1480 bytes, 37x40.
    Lotfollahi,
    /// 13 session-header pixels + 771 payload bytes, 28x28.
    Wang,
    /// Bare application payload padded or cut to 784 bytes, 28x28.
    Payload784,
    /// Min-max scaled feature vector padded to a square.
    Fingerprint,
}

impl EncoderId {
    /// Stable on-disk / CLI identifier.
    pub fn name(self) -> &'static str {
        match self {
            EncoderId::Lim => "lim",
            EncoderId::Lotfollahi => "lotfollahi",
            EncoderId::Wang => "wang",
            EncoderId::Payload784 => "payload784",
            EncoderId::Fingerprint => "fingerprint",
        }
    }

    /// Dataset-file byte code.
    pub fn code(self) -> u8 {
        match self {
            EncoderId::Lim => 0,
            EncoderId::Lotfollahi => 1,
            EncoderId::Wang => 2,
            EncoderId::Payload784 => 3,
            EncoderId::Fingerprint => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(EncoderId::Lim),
            1 => Some(EncoderId::Lotfollahi),
            2 => Some(EncoderId::Wang),
            3 => Some(EncoderId::Payload784),
            4 => Some(EncoderId::Fingerprint),
            _ => None,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "lim" => Some(EncoderId::Lim),
            "lotfollahi" => Some(EncoderId::Lotfollahi),
            "wang" => Some(EncoderId::Wang),
            "payload784" => Some(EncoderId::Payload784),
            "fingerprint" => Some(EncoderId::Fingerprint),
            _ => None,
        }
    }

    /// The encoder's native pixel ceiling: 15 for nibble pixels, 255 for bytes.
    pub fn pixel_max(self) -> u8 {
        match self {
            EncoderId::Lim => 15,
            _ => 255,
        }
    }
}

impl fmt::Display for EncoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A width x height grid of 8-bit pixels synthesized from packet bytes or
/// feature values. `pixels` is row-major and every value is <= `pixel_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoImage {
    pub width: u16,
    pub height: u16,
    pub pixels: Vec<u8>,
    pub encoder: EncoderId,
    pub pixel_max: u8,
    pub label: Option<u16>,
}

impl PseudoImage {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Binary PGM (P5) bytes: `P5\n{w} {h}\n{maxval}\n` + row-major pixels.
    pub fn render_pgm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() + 16);
        let header = alloc::format!("P5\n{} {}\n{}\n", self.width, self.height, self.pixel_max);
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    /// ASCII shade preview, darkest pixel = ' ', brightest = '@'.
    pub fn render_ascii(&self) -> String {
        const RAMP: &[u8] = b" .:-=+*#%@";
        let mut s = String::with_capacity((self.width as usize + 1) * self.height as usize);
        for row in 0..self.height as usize {
            for col in 0..self.width as usize {
                let v = self.pixels[row * self.width as usize + col] as usize;
                let idx = v * (RAMP.len() - 1) / self.pixel_max.max(1) as usize;
                s.push(RAMP[idx.min(RAMP.len() - 1)] as char);
            }
            s.push('\n');
        }
        s
    }
}
