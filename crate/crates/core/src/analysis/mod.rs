//! Traceroute-side analysis: path validation against a case, routing maps,
//! load-balancing and farside classification, and border-link delays.

mod classify;
mod delay;
mod maps;
pub mod plot;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::net::IpAddr;

use thiserror::Error;

pub use classify::{classify_allocation, classify_faras, AllocationClass, FarasClass};
pub use delay::{
    delay_histogram, delay_stats, link_delay, percentile, DelaySample, DelaySeries, DelaySummary, GroupBy,
    GroupKey, LinkDelay,
};
pub use maps::{build_routing_map, coverage_check, CoverageReport, RoutingMap, COVERAGE_THRESHOLD};
pub use validate::{validate_path, Rejection, ValidatedPath};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("hop {0} has no RTT samples")]
    MissingRtt(IpAddr),
    #[error("path to {dst} belongs to time {found}, expected {expected}")]
    MixedTimes { dst: IpAddr, found: u64, expected: u64 },
    #[error("path to {dst} does not belong to case {case}")]
    ForeignPath { dst: IpAddr, case: String },
}

/// Resolves interface addresses to router names.
pub trait NameOracle {
    fn resolve(&self, ip: &IpAddr) -> Option<&str>;
}

impl NameOracle for BTreeMap<IpAddr, String> {
    fn resolve(&self, ip: &IpAddr) -> Option<&str> {
        self.get(ip).map(String::as_str)
    }
}

impl NameOracle for HashMap<IpAddr, String> {
    fn resolve(&self, ip: &IpAddr) -> Option<&str> {
        self.get(ip).map(String::as_str)
    }
}
