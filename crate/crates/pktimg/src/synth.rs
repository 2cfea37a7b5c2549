//! Deterministic synthetic fixtures: a capture of five fake devices with
//! clearly separable payload signatures, the matching MAC map, and a
//! per-packet fingerprint CSV. Used by the demo workflow and the
//! end-to-end tests.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use pktimg_core::dataset::format_mac;
use pktimg_core::packet::LINKTYPE_ETHERNET;

use crate::pcap::write_pcap;

/// Device roster: (name, MAC, traffic byte band). Each device stamps an
/// 8-byte magic prefix on its payloads and fills the rest from its band,
/// so payload bytes alone separate the classes.
pub const DEVICES: [(&str, [u8; 6]); 5] = [
    ("acme-cam", [0x02, 0, 0, 0, 0, 0x01]),
    ("bolt-plug", [0x02, 0, 0, 0, 0, 0x02]),
    ("cozy-bulb", [0x02, 0, 0, 0, 0, 0x03]),
    ("drift-lock", [0x02, 0, 0, 0, 0, 0x04]),
    ("echo-hub", [0x02, 0, 0, 0, 0, 0x05]),
];

pub const GATEWAY_MAC: [u8; 6] = [0x02, 0, 0, 0, 0, 0xfe];

const GATEWAY_IP: [u8; 4] = [10, 0, 0, 1];
const GATEWAY_REPLIES: usize = 8;

/// Everything one synthetic scenario produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthBundle {
    pub pcap: Vec<u8>,
    pub mac_map_csv: String,
    pub fingerprint_csv: String,
    /// Data packets per device (excludes the SYN, DNS, and noise frames).
    pub packets_per_device: usize,
}

fn device_ip(index: usize) -> [u8; 4] {
    [10, 0, 0, 10 + index as u8]
}

fn magic_prefix(index: usize) -> [u8; 8] {
    let d = index as u8;
    [
        b'P',
        b'K',
        b'T',
        d,
        0xA5,
        d.wrapping_mul(17),
        0x5A,
        d.wrapping_mul(29),
    ]
}

fn byte_band(index: usize) -> (u8, u8) {
    let lo = 50 * index as u8;
    (lo, lo + 45)
}

struct FrameSpec<'a> {
    src_mac: [u8; 6],
    dst_mac: [u8; 6],
    proto: u8,
    src_ip: [u8; 4],
    dst_ip: [u8; 4],
    src_port: u16,
    dst_port: u16,
    tcp_flags: u8,
    l7: &'a [u8],
}

fn eth_ipv4_frame(spec: &FrameSpec) -> Vec<u8> {
    let transport_len = if spec.proto == 17 { 8 } else { 20 };
    let total_len = 20 + transport_len + spec.l7.len();
    let mut f = Vec::with_capacity(14 + total_len);
    f.extend_from_slice(&spec.dst_mac);
    f.extend_from_slice(&spec.src_mac);
    f.extend_from_slice(&[0x08, 0x00]);
    f.push(0x45);
    f.push(0);
    f.extend_from_slice(&(total_len as u16).to_be_bytes());
    f.extend_from_slice(&[0, 0, 0x40, 0]); // id, DF
    f.push(64);
    f.push(spec.proto);
    f.extend_from_slice(&[0, 0]);
    f.extend_from_slice(&spec.src_ip);
    f.extend_from_slice(&spec.dst_ip);
    f.extend_from_slice(&spec.src_port.to_be_bytes());
    f.extend_from_slice(&spec.dst_port.to_be_bytes());
    if spec.proto == 17 {
        f.extend_from_slice(&((8 + spec.l7.len()) as u16).to_be_bytes());
        f.extend_from_slice(&[0, 0]);
    } else {
        f.extend_from_slice(&[0, 0, 0, 1]);
        f.extend_from_slice(&[0, 0, 0, 0]);
        f.push(0x50);
        f.push(spec.tcp_flags);
        f.extend_from_slice(&[0xff, 0xff, 0, 0, 0, 0]);
    }
    f.extend_from_slice(spec.l7);
    f
}

fn arp_frame() -> Vec<u8> {
    let mut f = Vec::with_capacity(42);
    f.extend_from_slice(&[0xff; 6]);
    f.extend_from_slice(&GATEWAY_MAC);
    f.extend_from_slice(&[0x08, 0x06]);
    f.extend_from_slice(&[0u8; 28]);
    f
}

/// The 100 feature names of the synthetic fingerprint CSV: 4 scalar
/// statistics, a 16-bucket byte histogram, and the first 80 payload bytes.
pub fn feature_names() -> Vec<String> {
    let mut names = vec![
        "len".to_string(),
        "mean".to_string(),
        "min".to_string(),
        "max".to_string(),
    ];
    for i in 0..16 {
        names.push(format!("hist{i:02}"));
    }
    for i in 0..80 {
        names.push(format!("byte{i:02}"));
    }
    names
}

/// Engineered features of one payload, aligned with [`feature_names`].
pub fn features_of(payload: &[u8]) -> Vec<f64> {
    let mut values = Vec::with_capacity(100);
    values.push(payload.len() as f64);
    let sum: u64 = payload.iter().map(|&b| u64::from(b)).sum();
    values.push(if payload.is_empty() {
        0.0
    } else {
        sum as f64 / payload.len() as f64
    });
    values.push(f64::from(payload.iter().copied().min().unwrap_or(0)));
    values.push(f64::from(payload.iter().copied().max().unwrap_or(0)));
    let mut hist = [0usize; 16];
    for &b in payload {
        hist[usize::from(b >> 4)] += 1;
    }
    values.extend(hist.iter().map(|&n| n as f64));
    for i in 0..80 {
        values.push(f64::from(payload.get(i).copied().unwrap_or(0)));
    }
    values
}

/// Builds the whole scenario from one seed. Per device: `packets_per_device`
/// UDP data packets, one TCP SYN, and one DNS query. On top of that the
/// gateway answers a few times (an unknown source MAC) and sends one ARP
/// frame (not IP), so every skip path sees traffic.
pub fn generate(seed: u64, packets_per_device: usize) -> SynthBundle {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut frames: Vec<Vec<u8>> = Vec::new();
    let mut fingerprint_csv = String::new();
    let _ = writeln!(fingerprint_csv, "label,{}", feature_names().join(","));

    for _round in 0..packets_per_device {
        for (index, (name, mac)) in DEVICES.iter().enumerate() {
            let (lo, hi) = byte_band(index);
            let body_len = 32 + 50 * index + rng.random_range(0..30);
            let mut payload = magic_prefix(index).to_vec();
            for _ in 0..body_len {
                payload.push(rng.random_range(lo..=hi));
            }
            let mut row = String::from(*name);
            for value in features_of(&payload) {
                let _ = write!(row, ",{value}");
            }
            let _ = writeln!(fingerprint_csv, "{row}");
            frames.push(eth_ipv4_frame(&FrameSpec {
                src_mac: *mac,
                dst_mac: GATEWAY_MAC,
                proto: 17,
                src_ip: device_ip(index),
                dst_ip: GATEWAY_IP,
                src_port: 40000 + index as u16,
                dst_port: 9000 + index as u16,
                tcp_flags: 0,
                l7: &payload,
            }));
        }
    }

    for (index, (name, mac)) in DEVICES.iter().enumerate() {
        frames.push(eth_ipv4_frame(&FrameSpec {
            src_mac: *mac,
            dst_mac: GATEWAY_MAC,
            proto: 6,
            src_ip: device_ip(index),
            dst_ip: GATEWAY_IP,
            src_port: 50000 + index as u16,
            dst_port: 80,
            tcp_flags: 0x02, // SYN
            l7: &[],
        }));
        let mut dns = vec![0x12, 0x34, 0x01, 0x00, 0, 1, 0, 0, 0, 0, 0, 0];
        dns.extend_from_slice(name.as_bytes());
        frames.push(eth_ipv4_frame(&FrameSpec {
            src_mac: *mac,
            dst_mac: GATEWAY_MAC,
            proto: 17,
            src_ip: device_ip(index),
            dst_ip: GATEWAY_IP,
            src_port: 30000 + index as u16,
            dst_port: 53,
            tcp_flags: 0,
            l7: &dns,
        }));
    }

    for i in 0..GATEWAY_REPLIES {
        let index = i % DEVICES.len();
        let mut payload = vec![0u8; 20];
        rng.fill(payload.as_mut_slice());
        frames.push(eth_ipv4_frame(&FrameSpec {
            src_mac: GATEWAY_MAC,
            dst_mac: DEVICES[index].1,
            proto: 17,
            src_ip: GATEWAY_IP,
            dst_ip: device_ip(index),
            src_port: 9000 + index as u16,
            dst_port: 40000 + index as u16,
            tcp_flags: 0,
            l7: &payload,
        }));
    }
    frames.push(arp_frame());

    let records = frames
        .iter()
        .enumerate()
        .map(|(i, f)| (1_700_000_000 + i as u32, (i as u32 % 1000) * 1000, f.as_slice()));
    let pcap = write_pcap(LINKTYPE_ETHERNET, records);

    let mut mac_map_csv = String::from("mac,label\n");
    for (name, mac) in DEVICES {
        let _ = writeln!(mac_map_csv, "{},{name}", format_mac(mac));
    }

    SynthBundle {
        pcap,
        mac_map_csv,
        fingerprint_csv,
        packets_per_device,
    }
}
