//! Deterministic simulator: topologies with planted BGP-M cases, Paris
//! traceroute answers and per-link delay draws. Its output is the ground
//! truth the inference and analysis code is checked against.

mod config;
mod delay;
mod scenario;
mod topology;
mod trace;

use std::net::IpAddr;

use thiserror::Error;

pub use config::{
    AnnounceConfig, AsConfig, AsRole, CaseConfig, LinkConfig, Mutation, PatternKind,
    RouterConfig, SourceConfig, TopologyConfig,
};
pub use delay::{sample_link_delay, DelayModel, DelayParams};
pub use scenario::{generate_scenario, ScenarioSpec};
pub use topology::{
    build_topology, lg_snapshot, FarasPattern, HopTemplate, PlantedCase, SimLookingGlass,
    SimRouter, SimSource, Topology,
};
pub use trace::{
    measurement_ticks, run_campaign, run_traceroute, Hop, ProbeSpec, SimTrace, TraceRecord, TraceTruth,
    DEFAULT_START, TICK_SECONDS,
};

use crate::bgp::BgpError;
use crate::model::{ModelError, Prefix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid topology config: {0}")]
    Config(String),
    #[error("invalid delay model: {0}")]
    InvalidDelay(String),
    #[error("unknown router `{0}`")]
    UnknownRouter(String),
    #[error("duplicate router `{0}`")]
    DuplicateRouter(String),
    #[error("no link with far address {0}")]
    UnknownLinkIp(IpAddr),
    #[error("link toward {0} is not known to the delay model")]
    UnknownLink(IpAddr),
    #[error("duplicate link from `{0}` to {1}")]
    DuplicateLink(String, IpAddr),
    #[error("no case for `{0}` and {1}")]
    UnknownCase(String, Prefix),
    #[error("prefix {0} is not announced")]
    Unannounced(Prefix),
    #[error("prefix {0} is announced twice")]
    DuplicateAnnouncement(Prefix),
    #[error("case {router} {prefix}: far IP {ip} is not a link to the announcing AS")]
    CaseLink {
        router: String,
        prefix: Prefix,
        ip: IpAddr,
    },
    #[error("case {router} {prefix} violates deployment condition {condition}: {reason}")]
    CaseConditions {
        router: String,
        prefix: Prefix,
        condition: u8,
        reason: &'static str,
    },
    #[error("case {router} {prefix}: installed next hops differ from the planted links")]
    CaseTruncated { router: String, prefix: Prefix },
    #[error("source `{0}` is not configured")]
    UnknownSource(IpAddr),
    #[error("source {ip}: ingress index {index} out of range")]
    IngressIndex { ip: IpAddr, index: usize },
    #[error("packets_per_hop must be at least 1")]
    NoPackets,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bgp(#[from] BgpError),
}
