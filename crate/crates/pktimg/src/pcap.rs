//! Classic pcap container: auto-detected byte order, microsecond and
//! nanosecond magics. pcapng is out of scope.

use std::fs;
use std::path::Path;

/// Microsecond-timestamp magic in its canonical (big-endian) spelling.
pub const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
/// Nanosecond-timestamp magic.
pub const MAGIC_NANOS: u32 = 0xa1b2_3c4d;

const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;

/// One captured record, bytes exactly as stored in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPacket {
    /// Ordinal within the file, starting at 0.
    pub index: usize,
    pub ts_sec: u32,
    /// Fractional timestamp: microseconds or nanoseconds per the magic.
    pub ts_frac: u32,
    pub captured_len: u32,
    /// Original on-wire length. Some writers store values smaller than
    /// `captured_len`; both are recorded without cross-checking.
    pub original_len: u32,
    pub data: Vec<u8>,
}

/// A fully parsed capture file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capture {
    pub link_type: u32,
    pub nanosecond: bool,
    pub big_endian: bool,
    pub snaplen: u32,
    pub packets: Vec<RawPacket>,
}

#[derive(Debug, thiserror::Error)]
pub enum PcapError {
    #[error("cannot read capture file: {0}")]
    Io(#[from] std::io::Error),
    #[error("file is {got} bytes, shorter than the {GLOBAL_HEADER_LEN}-byte global header")]
    TooShort { got: usize },
    #[error("unknown magic {0:02x?}: not a classic pcap file (pcapng is not supported)")]
    BadMagic([u8; 4]),
    #[error("packet {index}: record header truncated ({available} of {RECORD_HEADER_LEN} bytes)")]
    TruncatedRecordHeader { index: usize, available: usize },
    #[error("packet {index}: body truncated (header declares {declared} bytes, {available} left)")]
    TruncatedRecordBody {
        index: usize,
        declared: u32,
        available: usize,
    },
}

/// Reads and parses a capture file.
pub fn open_pcap(path: impl AsRef<Path>) -> Result<Capture, PcapError> {
    parse_pcap_bytes(&fs::read(path)?)
}

/// Parses an in-memory classic pcap image. Total: any input either parses
/// or yields a descriptive error, never a panic.
pub fn parse_pcap_bytes(bytes: &[u8]) -> Result<Capture, PcapError> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(PcapError::TooShort { got: bytes.len() });
    }
    let magic_bytes: [u8; 4] = bytes[0..4].try_into().unwrap();
    let magic_be = u32::from_be_bytes(magic_bytes);
    let magic_le = u32::from_le_bytes(magic_bytes);
    let (big_endian, nanosecond) = match (magic_be, magic_le) {
        (MAGIC_MICROS, _) => (true, false),
        (MAGIC_NANOS, _) => (true, true),
        (_, MAGIC_MICROS) => (false, false),
        (_, MAGIC_NANOS) => (false, true),
        _ => return Err(PcapError::BadMagic(magic_bytes)),
    };
    let u32_at = |offset: usize| -> u32 {
        let raw: [u8; 4] = bytes[offset..offset + 4].try_into().unwrap();
        if big_endian {
            u32::from_be_bytes(raw)
        } else {
            u32::from_le_bytes(raw)
        }
    };
    let snaplen = u32_at(16);
    let link_type = u32_at(20);

    let mut packets = Vec::new();
    let mut pos = GLOBAL_HEADER_LEN;
    let mut index = 0usize;
    while pos < bytes.len() {
        if bytes.len() - pos < RECORD_HEADER_LEN {
            return Err(PcapError::TruncatedRecordHeader {
                index,
                available: bytes.len() - pos,
            });
        }
        let ts_sec = u32_at(pos);
        let ts_frac = u32_at(pos + 4);
        let captured_len = u32_at(pos + 8);
        let original_len = u32_at(pos + 12);
        pos += RECORD_HEADER_LEN;
        let available = bytes.len() - pos;
        if (captured_len as usize) > available {
            return Err(PcapError::TruncatedRecordBody {
                index,
                declared: captured_len,
                available,
            });
        }
        let data = bytes[pos..pos + captured_len as usize].to_vec();
        pos += captured_len as usize;
        packets.push(RawPacket {
            index,
            ts_sec,
            ts_frac,
            captured_len,
            original_len,
            data,
        });
        index += 1;
    }
    Ok(Capture {
        link_type,
        nanosecond,
        big_endian,
        snaplen,
        packets,
    })
}

/// Serializes frames as a little-endian, microsecond classic pcap.
pub fn write_pcap<'a>(
    link_type: u32,
    frames: impl IntoIterator<Item = (u32, u32, &'a [u8])>,
) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC_MICROS.to_le_bytes()); // d4 c3 b2 a1
    out.extend_from_slice(&2u16.to_le_bytes()); // version 2.4
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes()); // thiszone
    out.extend_from_slice(&0u32.to_le_bytes()); // sigfigs
    out.extend_from_slice(&65535u32.to_le_bytes()); // snaplen
    out.extend_from_slice(&link_type.to_le_bytes());
    for (ts_sec, ts_usec, data) in frames {
        out.extend_from_slice(&ts_sec.to_le_bytes());
        out.extend_from_slice(&ts_usec.to_le_bytes());
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
    }
    out
}
