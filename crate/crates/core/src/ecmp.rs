//! Next-hop selection among equal-cost border links.
//!
//! Four selectors are modelled:
//!
//! * hash-threshold (RFC 2992): a 16-bit keyed hash of the flow key is
//!   mapped onto `n` equal contiguous regions of the hash space;
//! * "universal": source and destination addresses only. The model keeps
//!   bit 2 of the destination's last octet (so destinations fall into
//!   aligned runs of four) and XORs it with a keyed one-bit parity of the
//!   source. This reproduces runs of four, an even split, and exactly two
//!   complementary allocation patterns across all sources. It is a model of
//!   the observed behaviour, not an emulation of any vendor's hash;
//! * "include-ports": hash-threshold over the full five-field key;
//! * per-packet round robin.

use std::collections::BTreeMap;
use std::fmt;
use std::net::IpAddr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{enumerate_probe_targets, BgpmCase, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EcmpError {
    #[error("{0:?} flows carry ports")]
    PortsRequired(Protocol),
    #[error("ICMP flows do not carry ports")]
    UnexpectedPorts,
    #[error("include-ports selection needs a UDP or TCP flow key")]
    MissingPorts,
    #[error("at least one link is required")]
    NoLinks,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Icmp,
    Udp,
    Tcp,
}

impl Protocol {
    fn wire(self) -> u8 {
        match self {
            Protocol::Icmp => 1,
            Protocol::Tcp => 6,
            Protocol::Udp => 17,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Icmp => "ICMP",
            Protocol::Udp => "UDP",
            Protocol::Tcp => "TCP",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "icmp" => Ok(Protocol::Icmp),
            "udp" => Ok(Protocol::Udp),
            "tcp" => Ok(Protocol::Tcp),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlowKey {
    src: IpAddr,
    dst: IpAddr,
    ports: Option<(u16, u16)>,
    protocol: Protocol,
}

impl FlowKey {
    pub fn icmp(src: IpAddr, dst: IpAddr) -> FlowKey {
        FlowKey {
            src,
            dst,
            ports: None,
            protocol: Protocol::Icmp,
        }
    }

    pub fn new(
        src: IpAddr,
        dst: IpAddr,
        src_port: Option<u16>,
        dst_port: Option<u16>,
        protocol: Protocol,
    ) -> Result<FlowKey, EcmpError> {
        let ports = match (protocol, src_port, dst_port) {
            (Protocol::Icmp, None, None) => None,
            (Protocol::Icmp, _, _) => return Err(EcmpError::UnexpectedPorts),
            (p, Some(s), Some(d)) => {
                let _ = p;
                Some((s, d))
            }
            (p, _, _) => return Err(EcmpError::PortsRequired(p)),
        };
        Ok(FlowKey {
            src,
            dst,
            ports,
            protocol,
        })
    }

    pub fn src(&self) -> IpAddr {
        self.src
    }

    pub fn dst(&self) -> IpAddr {
        self.dst
    }

    pub fn src_port(&self) -> Option<u16> {
        self.ports.map(|p| p.0)
    }

    pub fn dst_port(&self) -> Option<u16> {
        self.ports.map(|p| p.1)
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    fn serialize_into(&self, out: &mut Vec<u8>, with_ports: bool) {
        push_ip(out, &self.src);
        push_ip(out, &self.dst);
        if with_ports {
            out.push(self.protocol.wire());
            if let Some((s, d)) = self.ports {
                out.extend_from_slice(&s.to_be_bytes());
                out.extend_from_slice(&d.to_be_bytes());
            }
        }
    }
}

fn push_ip(out: &mut Vec<u8>, ip: &IpAddr) {
    match ip {
        IpAddr::V4(a) => {
            out.push(4);
            out.extend_from_slice(&a.octets());
        }
        IpAddr::V6(a) => {
            out.push(6);
            out.extend_from_slice(&a.octets());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EcmpAlgorithm {
    HashThreshold,
    Universal,
    IncludePorts,
    RoundRobin,
}

impl FromStr for EcmpAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "hash-threshold" => Ok(EcmpAlgorithm::HashThreshold),
            "universal" => Ok(EcmpAlgorithm::Universal),
            "include-ports" => Ok(EcmpAlgorithm::IncludePorts),
            "round-robin" => Ok(EcmpAlgorithm::RoundRobin),
            other => Err(format!("unknown ECMP algorithm `{other}`")),
        }
    }
}

/// Per-router load-balancing configuration. `seed` is fixed for a
/// simulation run; `router_salt` differs per router.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EcmpPolicy {
    pub algorithm: EcmpAlgorithm,
    pub seed: u64,
    pub router_salt: u64,
}

// FNV-1a over the bytes followed by the splitmix64 finalizer.
fn mix64(bytes: &[u8], seed: u64, salt: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.rotate_left(17) ^ salt.rotate_left(41);
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix(h ^ salt)
}

pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash16(bytes: &[u8], policy: &EcmpPolicy) -> u16 {
    (mix64(bytes, policy.seed, policy.router_salt) >> 48) as u16
}

/// Maps a 16-bit hash onto one of `n_links` contiguous regions. The first
/// `65536 % n` regions are one value wider than the rest.
pub fn hash_region(hash: u16, n_links: usize) -> usize {
    let n = n_links.max(1) as u32;
    let space = 1u32 << 16;
    let base = space / n;
    let rem = space % n;
    let h = hash as u32;
    let wide = rem * (base + 1);
    if h < wide {
        (h / (base + 1)) as usize
    } else {
        (rem + (h - wide) / base) as usize
    }
}

/// Hash-threshold selection over the complete flow key.
pub fn hash_threshold_select(key: &FlowKey, n_links: usize, policy: &EcmpPolicy) -> usize {
    if n_links <= 1 {
        return 0;
    }
    let mut buf = Vec::with_capacity(40);
    key.serialize_into(&mut buf, true);
    hash_region(hash16(&buf, policy), n_links)
}

/// The keyed one-bit source parity used by the universal model.
pub fn universal_parity(src: &IpAddr, policy: &EcmpPolicy) -> usize {
    let mut buf = Vec::with_capacity(17);
    push_ip(&mut buf, src);
    (mix64(&buf, policy.seed, policy.router_salt ^ 0x756e_6976) & 1) as usize
}

fn last_octet(ip: &IpAddr) -> u8 {
    match ip {
        IpAddr::V4(a) => a.octets()[3],
        IpAddr::V6(a) => a.octets()[15],
    }
}

/// Address-only ("universal") selection. With two links the result is
/// `bit 2 of dst's last octet XOR parity(src)`; other link counts fall back
/// to hash-threshold over the two addresses.
pub fn universal_select(src: &IpAddr, dst: &IpAddr, n_links: usize, policy: &EcmpPolicy) -> usize {
    if n_links == 2 {
        let block = ((last_octet(dst) >> 2) & 1) as usize;
        return block ^ universal_parity(src, policy);
    }
    if n_links <= 1 {
        return 0;
    }
    let mut buf = Vec::with_capacity(34);
    FlowKey::icmp(*src, *dst).serialize_into(&mut buf, false);
    hash_region(hash16(&buf, policy), n_links)
}

/// Hash-threshold over addresses and ports.
pub fn include_ports_select(
    key: &FlowKey,
    n_links: usize,
    policy: &EcmpPolicy,
) -> Result<usize, EcmpError> {
    if key.ports.is_none() {
        return Err(EcmpError::MissingPorts);
    }
    Ok(hash_threshold_select(key, n_links, policy))
}

/// Per-packet round robin state, owned by a single router.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundRobin {
    counter: u64,
}

impl RoundRobin {
    pub fn new(counter: u64) -> RoundRobin {
        RoundRobin { counter }
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next(&mut self, n_links: usize) -> usize {
        let (idx, next) = round_robin_next(self.counter, n_links);
        self.counter = next;
        idx
    }
}

pub fn round_robin_next(counter: u64, n_links: usize) -> (usize, u64) {
    let n = n_links.max(1) as u64;
    ((counter % n) as usize, counter.wrapping_add(1))
}

impl EcmpPolicy {
    /// Chooses a link for `key`. `Universal` ignores ports altogether;
    /// `IncludePorts` hashes ports when the flow has them and falls back to
    /// the address-only selector for ICMP. Round robin needs explicit state
    /// and is served by [`EcmpPolicy::select_with_state`].
    pub fn select(&self, key: &FlowKey, n_links: usize) -> usize {
        match self.algorithm {
            EcmpAlgorithm::HashThreshold => hash_threshold_select(key, n_links, self),
            EcmpAlgorithm::Universal => universal_select(&key.src, &key.dst, n_links, self),
            EcmpAlgorithm::IncludePorts => match key.ports {
                Some(_) => hash_threshold_select(key, n_links, self),
                None => universal_select(&key.src, &key.dst, n_links, self),
            },
            EcmpAlgorithm::RoundRobin => 0,
        }
    }

    pub fn select_with_state(&self, key: &FlowKey, n_links: usize, rr: &mut RoundRobin) -> usize {
        match self.algorithm {
            EcmpAlgorithm::RoundRobin => rr.next(n_links),
            _ => self.select(key, n_links),
        }
    }
}

/// Traceroute source port for a UDP probe to `dst` at `time`. Ports change
/// between measurement rounds but stay fixed within one traceroute.
pub fn probe_source_port(seed: u64, dst: &IpAddr, time: u64) -> u16 {
    let mut buf = Vec::with_capacity(25);
    push_ip(&mut buf, dst);
    buf.extend_from_slice(&time.to_be_bytes());
    let h = mix64(&buf, seed, 0x706f_7274);
    1024 + (h % (65536 - 1024)) as u16
}

/// Destination port used by UDP traceroute probes.
pub const TRACEROUTE_DST_PORT: u16 = 33435;

/// The flow key a traceroute probe from `src` to `dst` carries.
pub fn probe_flow_key(src: IpAddr, dst: IpAddr, protocol: Protocol, time: u64, seed: u64) -> FlowKey {
    match protocol {
        Protocol::Icmp => FlowKey::icmp(src, dst),
        p => FlowKey {
            src,
            dst,
            ports: Some((probe_source_port(seed, &dst, time), TRACEROUTE_DST_PORT)),
            protocol: p,
        },
    }
}

/// Destination to link assignment for one case, source and time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationMap {
    pub case: BgpmCase,
    pub time: u64,
    pub assignment: BTreeMap<IpAddr, usize>,
}

impl AllocationMap {
    pub fn link_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.case.link_count()];
        for idx in self.assignment.values() {
            counts[*idx] += 1;
        }
        counts
    }

    /// Rows of `dst_ip,link_index,far_ip`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dst_ip,link_index,far_ip\n");
        for (dst, idx) in &self.assignment {
            let far = self.case.far_ip_at(*idx).expect("link index within case");
            out.push_str(&format!("{dst},{idx},{far}\n"));
        }
        out
    }
}

/// Applies `policy` to every probe target of the case prefix, as a Paris
/// traceroute campaign from `src` at `time` would see it.
pub fn build_allocation_map(
    case: &BgpmCase,
    src: IpAddr,
    protocol: Protocol,
    time: u64,
    policy: &EcmpPolicy,
) -> Result<AllocationMap, EcmpError> {
    let n = case.link_count();
    let mut rr = RoundRobin::default();
    let assignment = enumerate_probe_targets(&case.dst_prefix())?
        .into_iter()
        .map(|dst| {
            let key = probe_flow_key(src, dst, protocol, time, policy.seed);
            (dst, policy.select_with_state(&key, n, &mut rr))
        })
        .collect();
    Ok(AllocationMap {
        case: case.clone(),
        time,
        assignment,
    })
}
