use std::fmt;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::NameOracle;
use crate::model::{BgpmCase, RouterId};
use crate::sim::TraceRecord;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    /// None of the case's far IPs is on the path.
    NoFarIp,
    /// The hop before the far IP belongs to another router.
    WrongNearBr,
    /// The hop before the far IP is silent, missing or has no name.
    UnresolvablePredecessor,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::NoFarIp => "no-far-ip",
            Rejection::WrongNearBr => "wrong-near-br",
            Rejection::UnresolvablePredecessor => "unresolvable-predecessor",
        })
    }
}

/// A trace known to have left through one of the case's border links.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedPath {
    pub trace: TraceRecord,
    pub matched_far_ip: IpAddr,
    pub near_ip: IpAddr,
    pub near_br: RouterId,
    /// Index of the far IP hop in `trace.hops`.
    pub far_hop: usize,
}

impl ValidatedPath {
    pub fn dst(&self) -> IpAddr {
        self.trace.probe.dst
    }

    pub fn time(&self) -> u64 {
        self.trace.probe.time
    }

    /// Responders between the far IP and the destination. Silent hops are
    /// kept as `None`; the destination's own reply is dropped.
    pub fn downstream(&self) -> Vec<Option<IpAddr>> {
        let dst = self.dst();
        let mut hops: Vec<Option<IpAddr>> = self.trace.hops[self.far_hop + 1..].iter().map(|h| h.ip).collect();
        if let Some(pos) = hops.iter().position(|h| *h == Some(dst)) {
            hops.truncate(pos);
        }
        hops
    }
}

/// Accepts a trace when one of the case's far IPs is on it and the hop just
/// before that far IP resolves to the case's near border router.
pub fn validate_path<N: NameOracle + ?Sized>(
    trace: &TraceRecord,
    case: &BgpmCase,
    dns: &N,
) -> Result<ValidatedPath, Rejection> {
    let far_ips = case.far_ips();
    let (idx, far) = trace
        .hops
        .iter()
        .enumerate()
        .find_map(|(i, h)| h.ip.filter(|ip| far_ips.contains(ip)).map(|ip| (i, ip)))
        .ok_or(Rejection::NoFarIp)?;
    let near_ip = idx
        .checked_sub(1)
        .and_then(|p| trace.hops[p].ip)
        .ok_or(Rejection::UnresolvablePredecessor)?;
    let name = dns.resolve(&near_ip).ok_or(Rejection::UnresolvablePredecessor)?;
    if name != case.near_br().name() {
        return Err(Rejection::WrongNearBr);
    }
    Ok(ValidatedPath {
        trace: trace.clone(),
        matched_far_ip: far,
        near_ip,
        near_br: case.near_br().clone(),
        far_hop: idx,
    })
}
