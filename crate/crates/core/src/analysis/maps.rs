use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;

use serde::Serialize;

use super::{AnalysisError, ValidatedPath};
use crate::ecmp::AllocationMap;
use crate::model::BgpmCase;

/// Minimum number of validated destinations for a usable epoch.
pub const COVERAGE_THRESHOLD: usize = 250;

/// Observed destination-to-link assignment for one case, source and time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingMap {
    pub case: BgpmCase,
    pub time: u64,
    pub src: Option<IpAddr>,
    /// dst → link index into the case's far IPs
    pub assignment: BTreeMap<IpAddr, usize>,
    pub downstream: BTreeMap<IpAddr, Vec<Option<IpAddr>>>,
    /// Destinations seen more than once; the last path wins.
    pub conflicts: BTreeSet<IpAddr>,
}

impl RoutingMap {
    pub fn empty(case: &BgpmCase, time: u64) -> RoutingMap {
        RoutingMap {
            case: case.clone(),
            time,
            src: None,
            assignment: BTreeMap::new(),
            downstream: BTreeMap::new(),
            conflicts: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn link_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.case.link_count()];
        for idx in self.assignment.values() {
            counts[*idx] += 1;
        }
        counts
    }

    pub fn to_allocation_map(&self) -> AllocationMap {
        AllocationMap {
            case: self.case.clone(),
            time: self.time,
            assignment: self.assignment.clone(),
        }
    }

    /// Rows of `dst_ip,link_index,far_ip`.
    pub fn to_csv(&self) -> String {
        self.to_allocation_map().to_csv()
    }

    /// One character per destination in address order: the link index, or
    /// `.` for a destination without a validated path.
    pub fn strip(&self, targets: &[IpAddr]) -> String {
        targets
            .iter()
            .map(|t| match self.assignment.get(t) {
                Some(i) => char::from_digit(*i as u32, 36).unwrap_or('?'),
                None => '.',
            })
            .collect()
    }
}

/// Builds the map for one epoch. Every path must belong to `case` and to
/// `time`.
pub fn build_routing_map(case: &BgpmCase, time: u64, paths: &[ValidatedPath]) -> Result<RoutingMap, AnalysisError> {
    let mut map = RoutingMap::empty(case, time);
    for p in paths {
        let dst = p.dst();
        if p.time() != time {
            return Err(AnalysisError::MixedTimes {
                dst,
                found: p.time(),
                expected: time,
            });
        }
        let idx = case
            .link_index(&p.matched_far_ip)
            .filter(|_| case.dst_prefix().contains(&dst))
            .ok_or_else(|| AnalysisError::ForeignPath {
                dst,
                case: case.to_string(),
            })?;
        map.src.get_or_insert(p.trace.probe.src);
        if map.assignment.insert(dst, idx).is_some() {
            map.conflicts.insert(dst);
        }
        map.downstream.insert(dst, p.downstream());
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub case: String,
    pub time: u64,
    pub reachable: usize,
    pub pass: bool,
}

pub fn coverage_check(map: &RoutingMap) -> CoverageReport {
    CoverageReport {
        case: map.case.to_string(),
        time: map.time,
        reachable: map.len(),
        pass: map.len() >= COVERAGE_THRESHOLD,
    }
}
