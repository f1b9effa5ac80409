use std::net::IpAddr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::delay::{sample_link_delay, DelayModel};
use super::topology::Topology;
use super::SimError;
use crate::ecmp::{probe_flow_key, round_robin_next, splitmix, EcmpAlgorithm, Protocol};
use crate::model::{enumerate_probe_targets, ip_to_bits, Prefix};

/// 2021-06-16 00:00:00 UTC, the first tick of a default campaign.
pub const DEFAULT_START: u64 = 1_623_801_600;
/// Measurement cadence: 15 minutes.
pub const TICK_SECONDS: u64 = 900;

const INTRA_HOP_MS: f64 = 0.4;
const FAR_HOP_MS: f64 = 0.25;
const NOISE_MEAN_MS: f64 = 0.3;
const TRAILING_SILENT_HOPS: usize = 3;

/// Timestamps of a campaign lasting `days` at `interval` seconds.
pub fn measurement_ticks(start: u64, days: u64, interval: u64) -> Vec<u64> {
    let n = days * 86_400 / interval.max(1);
    (0..n).map(|i| start + i * interval).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProbeSpec {
    pub src: IpAddr,
    pub dst: IpAddr,
    pub protocol: Protocol,
    pub time: u64,
    pub packets_per_hop: usize,
    pub paris_id: u16,
}

impl ProbeSpec {
    pub fn new(src: IpAddr, dst: IpAddr, protocol: Protocol, time: u64) -> ProbeSpec {
        ProbeSpec {
            src,
            dst,
            protocol,
            time,
            packets_per_hop: 3,
            paris_id: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub ttl: u8,
    pub ip: Option<IpAddr>,
    pub rtts: Vec<f64>,
}

/// One Paris traceroute. Serialized as a single JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TraceJson", into = "TraceJson")]
pub struct TraceRecord {
    pub probe: ProbeSpec,
    pub hops: Vec<Hop>,
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    timestamp: u64,
    src: IpAddr,
    dst: IpAddr,
    proto: Protocol,
    paris_id: u16,
    hops: Vec<Hop>,
}

impl From<TraceJson> for TraceRecord {
    fn from(j: TraceJson) -> Self {
        let packets = j.hops.iter().map(|h| h.rtts.len()).max().unwrap_or(3).max(1);
        TraceRecord {
            probe: ProbeSpec {
                src: j.src,
                dst: j.dst,
                protocol: j.proto,
                time: j.timestamp,
                packets_per_hop: packets,
                paris_id: j.paris_id,
            },
            hops: j.hops,
        }
    }
}

impl From<TraceRecord> for TraceJson {
    fn from(t: TraceRecord) -> Self {
        TraceJson {
            timestamp: t.probe.time,
            src: t.probe.src,
            dst: t.probe.dst,
            proto: t.probe.protocol,
            paris_id: t.probe.paris_id,
            hops: t.hops,
        }
    }
}

impl TraceRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn responders(&self) -> impl Iterator<Item = Option<IpAddr>> + '_ {
        self.hops.iter().map(|h| h.ip)
    }
}

/// What the simulator knows about a trace that the record itself hides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceTruth {
    pub far_ip: IpAddr,
    pub near_ip: IpAddr,
    /// Index into the installed next hops, ascending by address.
    pub link_index: usize,
    pub link_delay_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub record: TraceRecord,
    pub truth: Option<TraceTruth>,
}

fn probe_nonce(probe: &ProbeSpec) -> u64 {
    let d = ip_to_bits(&probe.dst);
    let s = ip_to_bits(&probe.src);
    splitmix(splitmix(d as u64 ^ (d >> 64) as u64) ^ s as u64 ^ (s >> 64) as u64)
}

// One noise term per packet, shared by every hop of the trace so it cancels
// in RTT differences between hops.
fn packet_noise(topo: &Topology, probe: &ProbeSpec) -> Vec<f64> {
    let seed = splitmix(topo.seed ^ probe_nonce(probe) ^ splitmix(probe.time) ^ probe.paris_id as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(1.0 / NOISE_MEAN_MS).expect("positive rate");
    (0..probe.packets_per_hop).map(|_| exp.sample(&mut rng)).collect()
}

impl Topology {
    /// Runs one traceroute and also reports the border link it crossed.
    pub fn trace(&self, probe: &ProbeSpec, delays: &DelayModel) -> Result<SimTrace, SimError> {
        if probe.packets_per_hop == 0 {
            return Err(SimError::NoPackets);
        }
        let source = self.source(&probe.src).ok_or(SimError::UnknownSource(probe.src))?;
        let noise = packet_noise(self, probe);
        let mut hops = Vec::new();
        let mut push = |ip: Option<IpAddr>, base: f64| {
            let rtts = match ip {
                Some(_) => noise.iter().map(|n| base + n).collect(),
                None => Vec::new(),
            };
            hops.push(Hop {
                ttl: hops.len() as u8 + 1,
                ip,
                rtts,
            });
        };

        let mut rtt = 0.0;
        for ip in &source.intra_hops {
            rtt += INTRA_HOP_MS;
            push(Some(*ip), rtt);
        }
        rtt += INTRA_HOP_MS;
        push(Some(source.near_ip), rtt);

        let router = &self.routers[source.exit_router];
        let group = router.rib.lookup(&probe.dst);
        let planted = group.and_then(|g| self.planted_at(&router.id, &g.dst_prefix()));
        let silenced = planted.is_some_and(|p| {
            p.unreachable_first && probe.dst == p.case.dst_prefix().host(1)
        });
        let group = match group {
            Some(g) if !silenced => g,
            _ => {
                for _ in 0..TRAILING_SILENT_HOPS {
                    push(None, 0.0);
                }
                return Ok(SimTrace {
                    record: TraceRecord { probe: *probe, hops },
                    truth: None,
                });
            }
        };

        let next_hops: Vec<IpAddr> = group.next_hops().into_iter().collect();
        let n = next_hops.len();
        let link_index = match router.policy.algorithm {
            EcmpAlgorithm::RoundRobin => {
                round_robin_next(self.next_round_robin(source.exit_router), n).0
            }
            _ => {
                let key = probe_flow_key(probe.src, probe.dst, probe.protocol, probe.time, self.seed);
                router.policy.select(&key, n)
            }
        };
        let far_ip = next_hops[link_index];
        let link = self
            .link(&router.id, &far_ip)
            .ok_or(SimError::UnknownLinkIp(far_ip))?;
        let delay = sample_link_delay(delays, link, probe.time, probe_nonce(probe))?;
        rtt += delay;
        push(Some(far_ip), rtt);

        let downstream: Vec<Option<IpAddr>> = match planted {
            Some(p) => {
                let idx = p.case.link_index(&far_ip).unwrap_or(0);
                p.pattern.internal_hop_plan[idx]
                    .iter()
                    .map(|t| t.resolve(&probe.dst))
                    .collect()
            }
            None => group
                .best()
                .neighbor_as()
                .and_then(|asn| self.far_as_hop(&asn))
                .into_iter()
                .map(Some)
                .collect(),
        };
        for ip in downstream {
            rtt += FAR_HOP_MS;
            push(ip, rtt);
        }
        rtt += FAR_HOP_MS;
        push(Some(probe.dst), rtt);

        Ok(SimTrace {
            record: TraceRecord { probe: *probe, hops },
            truth: Some(TraceTruth {
                far_ip,
                near_ip: source.near_ip,
                link_index,
                link_delay_ms: delay,
            }),
        })
    }
}

pub fn run_traceroute(
    topo: &Topology,
    probe: &ProbeSpec,
    delays: &DelayModel,
) -> Result<TraceRecord, SimError> {
    topo.trace(probe, delays).map(|t| t.record)
}

/// Traces every probe target of `prefix` from `src` at `time`, in address
/// order.
pub fn run_campaign(
    topo: &Topology,
    src: IpAddr,
    prefix: &Prefix,
    protocol: Protocol,
    time: u64,
    delays: &DelayModel,
) -> Result<Vec<SimTrace>, SimError> {
    enumerate_probe_targets(prefix)?
        .into_iter()
        .map(|dst| topo.trace(&ProbeSpec::new(src, dst, protocol, time), delays))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::{PatternKind, SourceConfig, TopologyConfig};
    use crate::sim::topology::build_topology;
    use crate::sim::topology::tests::two_link_config;

    fn config(pattern: PatternKind) -> TopologyConfig {
        let mut cfg = two_link_config(pattern);
        cfg.sources.push(SourceConfig {
            ip: "209.51.186.5".parse().unwrap(),
            exit_router: "core1.tyo1.he.net".into(),
            ingress_index: 0,
            intra_hops: None,
        });
        cfg
    }

    fn ip(s: &str) -> IpAddr {
        s.parse().unwrap()
    }

    #[test]
    fn ticks_for_three_days() {
        let t = measurement_ticks(DEFAULT_START, 3, TICK_SECONDS);
        assert_eq!(t.len(), 288);
        assert_eq!(t[1] - t[0], 900);
    }

    #[test]
    fn icmp_trace_crosses_one_far_ip_and_is_stable() {
        let topo = build_topology(&config(PatternKind::Parallel)).unwrap();
        let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
        let probe = ProbeSpec::new(ip("209.51.186.5"), ip("160.18.2.9"), Protocol::Icmp, DEFAULT_START);
        let a = topo.trace(&probe, &delays).unwrap();
        let crossed: Vec<IpAddr> = a
            .record
            .responders()
            .flatten()
            .filter(|ip| topo.planted[0].case.far_ips().contains(ip))
            .collect();
        assert_eq!(crossed.len(), 1);
        let later = ProbeSpec { time: DEFAULT_START + 900, ..probe };
        let b = topo.trace(&later, &delays).unwrap();
        let ips = |t: &SimTrace| t.record.responders().collect::<Vec<_>>();
        assert_eq!(ips(&a), ips(&b));
        assert_ne!(a.record.hops[3].rtts, b.record.hops[3].rtts);
        assert_eq!(a.record.hops.last().unwrap().ip, Some(probe.dst));
    }

    #[test]
    fn rtt_difference_is_the_link_delay() {
        let topo = build_topology(&config(PatternKind::Merge)).unwrap();
        let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
        for i in 1..=50u8 {
            let probe = ProbeSpec::new(ip("209.51.186.5"), IpAddr::V4([160, 18, 2, i].into()), Protocol::Udp, DEFAULT_START);
            let t = topo.trace(&probe, &delays).unwrap();
            let truth = t.truth.unwrap();
            let min = |ip: IpAddr| {
                t.record
                    .hops
                    .iter()
                    .find(|h| h.ip == Some(ip))
                    .unwrap()
                    .rtts
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
            };
            let d = min(truth.far_ip) - min(truth.near_ip);
            assert!((d - truth.link_delay_ms).abs() < 1e-6);
        }
    }

    #[test]
    fn unresponsive_pattern_has_silent_hop() {
        let topo = build_topology(&config(PatternKind::Unresponsive)).unwrap();
        let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
        let probe = ProbeSpec::new(ip("209.51.186.5"), ip("160.18.2.9"), Protocol::Icmp, DEFAULT_START);
        let t = run_traceroute(&topo, &probe, &delays).unwrap();
        assert!(t.hops.iter().any(|h| h.ip.is_none()));
    }

    #[test]
    fn unroutable_destination_ends_silent() {
        let topo = build_topology(&config(PatternKind::Parallel)).unwrap();
        let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
        let probe = ProbeSpec::new(ip("209.51.186.5"), ip("8.8.8.8"), Protocol::Icmp, DEFAULT_START);
        let t = topo.trace(&probe, &delays).unwrap();
        assert!(t.truth.is_none());
        assert!(t.record.hops.iter().rev().take(3).all(|h| h.ip.is_none()));
    }

    #[test]
    fn json_round_trip() {
        let topo = build_topology(&config(PatternKind::Unresponsive)).unwrap();
        let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
        let probe = ProbeSpec::new(ip("209.51.186.5"), ip("160.18.2.77"), Protocol::Udp, DEFAULT_START);
        let t = run_traceroute(&topo, &probe, &delays).unwrap();
        let line = t.to_json_line();
        assert!(line.contains("\"proto\":\"udp\"") && line.contains("\"ip\":null"));
        let back: TraceRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, t);
    }
}
