use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::RoutingMap;
use crate::model::ip_to_bits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationClass {
    PerSessionUniversal,
    PerFlowIncludePorts,
    RoundRobinLike,
    Unknown,
}

impl fmt::Display for AllocationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AllocationClass::PerSessionUniversal => "per-session-universal",
            AllocationClass::PerFlowIncludePorts => "per-flow-include-ports",
            AllocationClass::RoundRobinLike => "round-robin-like",
            AllocationClass::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FarasClass {
    SplitPerLink,
    Parallel,
    Merge,
    Complex,
    Unresponsive,
}

impl fmt::Display for FarasClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FarasClass::SplitPerLink => "split-per-link",
            FarasClass::Parallel => "parallel",
            FarasClass::Merge => "merge",
            FarasClass::Complex => "complex",
            FarasClass::Unresponsive => "unresponsive",
        })
    }
}

fn same_on_common(a: &RoutingMap, b: &RoutingMap) -> bool {
    a.assignment
        .iter()
        .all(|(d, i)| b.assignment.get(d).is_none_or(|j| i == j))
}

fn complementary(a: &RoutingMap, b: &RoutingMap) -> bool {
    let mut any = false;
    for (d, i) in &a.assignment {
        if let Some(j) = b.assignment.get(d) {
            if i == j {
                return false;
            }
            any = true;
        }
    }
    any
}

// Aligned groups of four consecutive addresses. Destinations start at .1,
// so the edge groups are short; one mixed group is tolerated.
fn has_blocks_of_four(map: &RoutingMap) -> bool {
    let mut blocks: BTreeMap<u128, BTreeSet<usize>> = BTreeMap::new();
    for (d, i) in &map.assignment {
        blocks.entry(ip_to_bits(d) >> 2).or_default().insert(*i);
    }
    let mixed = blocks.values().filter(|s| s.len() > 1).count();
    let used: BTreeSet<usize> = map.assignment.values().copied().collect();
    used.len() >= 2 && mixed <= 1
}

fn within(counts: &[usize], sigmas: f64) -> bool {
    let p = 1.0 / counts.len() as f64;
    let total: usize = counts.iter().sum();
    let expected = total as f64 * p;
    let slack = sigmas * (total as f64 * p * (1.0 - p)).sqrt() + 1.0;
    counts.iter().all(|c| (*c as f64 - expected).abs() <= slack)
}

// Per-link totals pooled over all maps within 3 sigma of an even split. A
// single map only has to stay within 5 sigma: with hundreds of maps a few
// honest 3 sigma excursions are expected.
fn balanced(maps: &[RoutingMap]) -> bool {
    let n = maps[0].case.link_count();
    let mut pooled = vec![0; n];
    for m in maps {
        for (i, c) in m.link_counts().iter().enumerate() {
            pooled[i] += c;
        }
    }
    within(&pooled, 3.0) && maps.iter().all(|m| within(&m.link_counts(), 5.0))
}

// Consecutive destinations in address order mostly step to the next link.
fn cycles(map: &RoutingMap) -> bool {
    let n = map.case.link_count();
    let seq: Vec<usize> = map.assignment.values().copied().collect();
    if seq.len() < 2 {
        return false;
    }
    let steps = seq.windows(2).filter(|w| w[1] == (w[0] + 1) % n).count();
    steps * 10 >= (seq.len() - 1) * 9
}

/// Classifies a series of maps of one case and source taken at different
/// times. `other_source`, when given, holds maps of the same case from a
/// second source and is paired with the first series by time.
pub fn classify_allocation(maps: &[RoutingMap], other_source: Option<&[RoutingMap]>) -> AllocationClass {
    let Some(first) = maps.first() else {
        return AllocationClass::Unknown;
    };
    if first.case.link_count() < 2 || maps.iter().any(|m| m.is_empty()) {
        return AllocationClass::Unknown;
    }
    if maps.iter().all(cycles) {
        return AllocationClass::RoundRobinLike;
    }
    if maps.len() < 2 {
        return AllocationClass::Unknown;
    }
    let stable = maps.windows(2).all(|w| same_on_common(&w[0], &w[1]));
    if stable {
        let blocks = maps.iter().all(has_blocks_of_four);
        let pairs_ok = other_source.is_none_or(|other| {
            let by_time: BTreeMap<u64, &RoutingMap> = other.iter().map(|m| (m.time, m)).collect();
            maps.iter().all(|m| match by_time.get(&m.time) {
                Some(o) => same_on_common(m, o) || complementary(m, o),
                None => true,
            })
        });
        return if blocks && pairs_ok {
            AllocationClass::PerSessionUniversal
        } else {
            AllocationClass::Unknown
        };
    }
    if balanced(maps) {
        AllocationClass::PerFlowIncludePorts
    } else {
        AllocationClass::Unknown
    }
}

/// Classifies what happens behind the far IPs from the downstream hops of
/// every mapped destination.
pub fn classify_faras(maps: &[RoutingMap]) -> FarasClass {
    let mut per_link: BTreeMap<usize, BTreeSet<Vec<IpAddr>>> = BTreeMap::new();
    for m in maps {
        for (dst, idx) in &m.assignment {
            let Some(down) = m.downstream.get(dst) else {
                continue;
            };
            if down.iter().any(Option::is_none) {
                return FarasClass::Unresponsive;
            }
            per_link
                .entry(*idx)
                .or_default()
                .insert(down.iter().flatten().copied().collect());
        }
    }
    if per_link.is_empty() {
        return FarasClass::Complex;
    }
    if per_link.values().all(|s| s.len() >= 2) {
        return FarasClass::SplitPerLink;
    }
    if per_link.values().all(|s| s.len() == 1) {
        let mut seen = BTreeSet::new();
        let shared = per_link
            .values()
            .flat_map(|s| s.iter().next().into_iter().flatten())
            .any(|ip| !seen.insert(*ip));
        return if shared { FarasClass::Merge } else { FarasClass::Parallel };
    }
    FarasClass::Complex
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Asn, BgpmCase, RouterId};
    use std::net::Ipv4Addr;

    fn case(links: u8) -> BgpmCase {
        let he = Asn::new(6939).unwrap();
        BgpmCase::new(
            he,
            RouterId::new("core1.tyo1.he.net", he).unwrap(),
            Asn::new(2907).unwrap(),
            "160.18.2.0/24".parse().unwrap(),
            (0..links).map(|i| IpAddr::V4(Ipv4Addr::new(210, 171, 224, 96 + i))),
        )
        .unwrap()
    }

    fn dst(i: u8) -> IpAddr {
        IpAddr::V4(Ipv4Addr::new(160, 18, 2, i))
    }

    fn map(links: u8, time: u64, f: impl Fn(u8) -> usize) -> RoutingMap {
        let mut m = RoutingMap::empty(&case(links), time);
        for i in 1..=254 {
            m.assignment.insert(dst(i), f(i));
        }
        m
    }

    #[test]
    fn universal_blocks_and_complement() {
        let a: Vec<RoutingMap> = (0..4).map(|t| map(2, t, |i| ((i >> 2) & 1) as usize)).collect();
        let b: Vec<RoutingMap> = (0..4).map(|t| map(2, t, |i| 1 - ((i >> 2) & 1) as usize)).collect();
        assert_eq!(classify_allocation(&a, Some(&b)), AllocationClass::PerSessionUniversal);
        assert_eq!(classify_allocation(&a, None), AllocationClass::PerSessionUniversal);
        // half-flipped second source is neither equal nor complementary
        let c: Vec<RoutingMap> = (0..4).map(|t| map(2, t, |i| ((i >> 3) & 1) as usize)).collect();
        assert_eq!(classify_allocation(&a, Some(&c)), AllocationClass::Unknown);
    }

    #[test]
    fn varying_balanced_maps_are_per_flow() {
        let maps: Vec<RoutingMap> = (0..4u64)
            .map(|t| map(2, t, |i| ((i as u64).wrapping_mul(2654435761).wrapping_add(t * 977) >> 7 & 1) as usize))
            .collect();
        assert_eq!(classify_allocation(&maps, None), AllocationClass::PerFlowIncludePorts);
    }

    #[test]
    fn round_robin_and_degenerate() {
        let rr: Vec<RoutingMap> = (0..2).map(|t| map(3, t, |i| (i as usize + t as usize) % 3)).collect();
        assert_eq!(classify_allocation(&rr, None), AllocationClass::RoundRobinLike);
        let single = vec![map(2, 0, |_| 0), map(2, 1, |_| 0)];
        assert_eq!(classify_allocation(&single, None), AllocationClass::Unknown);
        assert_eq!(classify_allocation(&[], None), AllocationClass::Unknown);
    }

    fn with_down(links: u8, f: impl Fn(u8, usize) -> Vec<Option<IpAddr>>) -> RoutingMap {
        let mut m = map(links, 0, |i| ((i >> 2) & 1) as usize);
        for (d, idx) in m.assignment.clone() {
            let IpAddr::V4(v4) = d else { unreachable!() };
            m.downstream.insert(d, f(v4.octets()[3], idx));
        }
        m
    }

    fn h(a: u8) -> Option<IpAddr> {
        Some(IpAddr::V4(Ipv4Addr::new(100, 64, 0, a)))
    }

    #[test]
    fn farside_patterns() {
        let split = with_down(2, |i, l| vec![h(10 * l as u8 + i % 2), h(50 + l as u8)]);
        assert_eq!(classify_faras(&[split]), FarasClass::SplitPerLink);
        let parallel = with_down(2, |_, l| vec![h(10 + l as u8), h(20 + l as u8)]);
        assert_eq!(classify_faras(&[parallel]), FarasClass::Parallel);
        let merge = with_down(2, |_, l| vec![h(10 + l as u8), h(99)]);
        assert_eq!(classify_faras(&[merge]), FarasClass::Merge);
        let complex = with_down(2, |i, l| {
            if l == 0 {
                vec![h(1), h(2)]
            } else {
                vec![h(3), h(4 + i % 2)]
            }
        });
        assert_eq!(classify_faras(&[complex]), FarasClass::Complex);
        let silent = with_down(2, |_, l| vec![h(10 + l as u8), None, h(30)]);
        assert_eq!(classify_faras(&[silent]), FarasClass::Unresponsive);
    }
}
