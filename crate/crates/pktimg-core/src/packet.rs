//! Ethernet/IPv4/IPv6 + TCP/UDP frame decoding and flow keys.
//!
//! [`parse_packet`] is total over arbitrary byte input: every frame either
//! decodes into a [`ParsedPacket`] or is skipped with a [`SkipReason`],
//! never a panic. Only what the pseudo-image encoders need is decoded:
//! addresses, ports, TCP flags, and the payload boundaries.

use alloc::vec::Vec;
use core::net::{IpAddr, Ipv4Addr, Ipv6Addr};

/// DLT_EN10MB, the only supported link type.
pub const LINKTYPE_ETHERNET: u32 = 1;

const ETH_HLEN: usize = 14;
const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_IPV6: u16 = 0x86DD;
const ETHERTYPE_VLAN: u16 = 0x8100;

const PROTO_TCP: u8 = 6;
const PROTO_UDP: u8 = 17;

/// IPv6 extension header numbers we refuse to traverse.
const IPV6_EXT_HEADERS: [u8; 9] = [0, 43, 44, 50, 51, 60, 135, 139, 140];

/// Transport-layer protocol of a parsed packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transport {
    Tcp,
    Udp,
}

impl Transport {
    /// IP protocol number (6 or 17).
    pub fn proto_number(self) -> u8 {
        match self {
            Transport::Tcp => PROTO_TCP,
            Transport::Udp => PROTO_UDP,
        }
    }
}

/// Why a frame was not turned into a [`ParsedPacket`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SkipReason {
    /// Link type other than Ethernet.
    UnsupportedLink,
    /// EtherType carries no IP layer (ARP, LLDP, ...).
    NonIp,
    /// IP protocol other than TCP or UDP.
    UnsupportedProtocol,
    /// IPv6 extension headers are not traversed.
    Ipv6Extension,
    /// Non-first IP fragment; it has no transport header.
    Fragment,
    /// A header extends past the captured bytes.
    Truncated,
    /// Header fields are self-contradictory (bad version, IHL < 20, ...).
    Malformed,
}

impl SkipReason {
    /// Stable lowercase name used in skip-count summaries.
    pub fn name(self) -> &'static str {
        match self {
            SkipReason::UnsupportedLink => "unsupported-link",
            SkipReason::NonIp => "non-ip",
            SkipReason::UnsupportedProtocol => "unsupported-protocol",
            SkipReason::Ipv6Extension => "ipv6-extension",
            SkipReason::Fragment => "fragment",
            SkipReason::Truncated => "truncated",
            SkipReason::Malformed => "malformed",
        }
    }
}

/// Source/destination addresses, ports, and IP protocol of one packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FiveTuple {
    pub src_ip: IpAddr,
    pub dst_ip: IpAddr,
    pub src_port: u16,
    pub dst_port: u16,
    pub proto: u8,
}

/// A decoded TCP or UDP packet.
///
/// `ip_payload` holds every byte after the IP header (transport header
/// included); the application payload is its suffix starting at
/// `l7_offset`, so the two views can never disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPacket {
    pub five_tuple: FiveTuple,
    pub transport: Transport,
    /// TCP flag byte; `None` for UDP.
    pub tcp_flags: Option<u8>,
    pub src_mac: [u8; 6],
    pub dst_mac: [u8; 6],
    pub ip_payload: Vec<u8>,
    /// Transport header length: 8 for UDP, 4 x data-offset for TCP.
    pub l7_offset: usize,
}

impl ParsedPacket {
    /// Application-layer payload: the bytes after the transport header.
    pub fn l7_payload(&self) -> &[u8] {
        self.ip_payload.get(self.l7_offset..).unwrap_or(&[])
    }
}

fn read_u16_be(data: &[u8], at: usize) -> Option<u16> {
    let bytes = data.get(at..at + 2)?;
    Some(u16::from_be_bytes([bytes[0], bytes[1]]))
}

/// Decodes one captured Ethernet frame.
///
/// Strips the 14-byte Ethernet header (plus at most one 802.1Q VLAN tag),
/// then IPv4 (honoring IHL and the total-length field, so trailing frame
/// padding is dropped) or IPv6 (fixed 40-byte header), then TCP (honoring
/// the data offset) or UDP.
pub fn parse_packet(frame: &[u8], link_type: u32) -> Result<ParsedPacket, SkipReason> {
    if link_type != LINKTYPE_ETHERNET {
        return Err(SkipReason::UnsupportedLink);
    }
    if frame.len() < ETH_HLEN {
        return Err(SkipReason::Truncated);
    }
    let mut dst_mac = [0u8; 6];
    let mut src_mac = [0u8; 6];
    dst_mac.copy_from_slice(&frame[0..6]);
    src_mac.copy_from_slice(&frame[6..12]);

    let mut ethertype = read_u16_be(frame, 12).ok_or(SkipReason::Truncated)?;
    let mut l3_start = ETH_HLEN;
    if ethertype == ETHERTYPE_VLAN {
        ethertype = read_u16_be(frame, 16).ok_or(SkipReason::Truncated)?;
        l3_start += 4;
    }
    let l3 = frame.get(l3_start..).ok_or(SkipReason::Truncated)?;

    let (ip_bytes, proto, src_ip, dst_ip) = match ethertype {
        ETHERTYPE_IPV4 => parse_ipv4(l3)?,
        ETHERTYPE_IPV6 => parse_ipv6(l3)?,
        _ => return Err(SkipReason::NonIp),
    };

    let (transport, tcp_flags, l7_offset) = parse_transport(proto, ip_bytes)?;
    let src_port = read_u16_be(ip_bytes, 0).ok_or(SkipReason::Truncated)?;
    let dst_port = read_u16_be(ip_bytes, 2).ok_or(SkipReason::Truncated)?;

    Ok(ParsedPacket {
        five_tuple: FiveTuple {
            src_ip,
            dst_ip,
            src_port,
            dst_port,
            proto,
        },
        transport,
        tcp_flags,
        src_mac,
        dst_mac,
        ip_payload: ip_bytes.to_vec(),
        l7_offset,
    })
}

fn parse_ipv4(l3: &[u8]) -> Result<(&[u8], u8, IpAddr, IpAddr), SkipReason> {
    if l3.len() < 20 {
        return Err(SkipReason::Truncated);
    }
    if l3[0] >> 4 != 4 {
        return Err(SkipReason::Malformed);
    }
    let ihl = ((l3[0] & 0x0F) as usize) * 4;
    if ihl < 20 {
        return Err(SkipReason::Malformed);
    }
    if l3.len() < ihl {
        return Err(SkipReason::Truncated);
    }
    let total_len = read_u16_be(l3, 2).ok_or(SkipReason::Truncated)? as usize;
    if total_len < ihl {
        return Err(SkipReason::Malformed);
    }
    // Fragment offset != 0 means no transport header in this fragment.
    let flags_frag = read_u16_be(l3, 6).ok_or(SkipReason::Truncated)?;
    if flags_frag & 0x1FFF != 0 {
        return Err(SkipReason::Fragment);
    }
    let proto = l3[9];
    if proto != PROTO_TCP && proto != PROTO_UDP {
        return Err(SkipReason::UnsupportedProtocol);
    }
    let src = IpAddr::V4(Ipv4Addr::new(l3[12], l3[13], l3[14], l3[15]));
    let dst = IpAddr::V4(Ipv4Addr::new(l3[16], l3[17], l3[18], l3[19]));
    // The total-length field bounds the payload so Ethernet padding is not
    // mistaken for data; a snaplen-truncated capture keeps what is there.
    let end = total_len.min(l3.len());
    Ok((&l3[ihl..end], proto, src, dst))
}

fn parse_ipv6(l3: &[u8]) -> Result<(&[u8], u8, IpAddr, IpAddr), SkipReason> {
    if l3.len() < 40 {
        return Err(SkipReason::Truncated);
    }
    if l3[0] >> 4 != 6 {
        return Err(SkipReason::Malformed);
    }
    let payload_len = read_u16_be(l3, 4).ok_or(SkipReason::Truncated)? as usize;
    let next_header = l3[6];
    if IPV6_EXT_HEADERS.contains(&next_header) {
        return Err(SkipReason::Ipv6Extension);
    }
    if next_header != PROTO_TCP && next_header != PROTO_UDP {
        return Err(SkipReason::UnsupportedProtocol);
    }
    let mut src = [0u8; 16];
    let mut dst = [0u8; 16];
    src.copy_from_slice(&l3[8..24]);
    dst.copy_from_slice(&l3[24..40]);
    let end = (40 + payload_len).min(l3.len());
    Ok((
        &l3[40..end],
        next_header,
        IpAddr::V6(Ipv6Addr::from(src)),
        IpAddr::V6(Ipv6Addr::from(dst)),
    ))
}

fn parse_transport(proto: u8, ip_bytes: &[u8]) -> Result<(Transport, Option<u8>, usize), SkipReason> {
    match proto {
        PROTO_TCP => {
            if ip_bytes.len() < 20 {
                return Err(SkipReason::Truncated);
            }
            let data_offset = ((ip_bytes[12] >> 4) as usize) * 4;
            if data_offset < 20 {
                return Err(SkipReason::Malformed);
            }
            if data_offset > ip_bytes.len() {
                return Err(SkipReason::Truncated);
            }
            Ok((Transport::Tcp, Some(ip_bytes[13]), data_offset))
        }
        PROTO_UDP => {
            if ip_bytes.len() < 8 {
                return Err(SkipReason::Truncated);
            }
            Ok((Transport::Udp, None, 8))
        }
        _ => Err(SkipReason::UnsupportedProtocol),
    }
}

/// Direction-agnostic conversation key.
///
/// The lexicographically smaller (ip bytes, then port) endpoint becomes the
/// source slot, so both directions of a conversation map to one key.
pub fn session_key(p: &ParsedPacket) -> FiveTuple {
    let t = p.five_tuple;
    if (t.src_ip, t.src_port) <= (t.dst_ip, t.dst_port) {
        t
    } else {
        FiveTuple {
            src_ip: t.dst_ip,
            dst_ip: t.src_ip,
            src_port: t.dst_port,
            dst_port: t.src_port,
            proto: t.proto,
        }
    }
}

/// Direction-preserving key: the 5-tuple exactly as observed.
pub fn flow_key(p: &ParsedPacket) -> FiveTuple {
    p.five_tuple
}

/// TCP packets carrying no application payload: SYN, SYN-ACK, bare ACK,
/// FIN, RST, keep-alives. The criterion is the absence of a load, not the
/// flag pattern, so an empty-payload UDP packet is not a handshake.
pub fn is_handshake(p: &ParsedPacket) -> bool {
    p.transport == Transport::Tcp && p.l7_payload().is_empty()
}

/// Port 53 on either side. mDNS (5353) is deliberately not matched.
pub fn is_dns(p: &ParsedPacket) -> bool {
    p.five_tuple.src_port == 53 || p.five_tuple.dst_port == 53
}
