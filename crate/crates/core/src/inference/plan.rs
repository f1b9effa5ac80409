use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::lg::SummaryTable;
use crate::model::{Asn, Prefix, RouterId};

/// Every AS adjacent to `near_as` on some path. Prepending is collapsed
/// first, so `[X X B]` contributes only `B`.
pub fn derive_neighbors_from_rib(as_paths: &[Vec<Asn>], near_as: Asn) -> BTreeSet<Asn> {
    let mut out = BTreeSet::new();
    for path in as_paths {
        let mut collapsed = path.clone();
        collapsed.dedup();
        for (i, asn) in collapsed.iter().enumerate() {
            if *asn != near_as {
                continue;
            }
            if i > 0 {
                out.insert(collapsed[i - 1]);
            }
            if let Some(next) = collapsed.get(i + 1) {
                out.insert(*next);
            }
        }
    }
    out.remove(&near_as);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborPlan {
    pub neighbor_as: Asn,
    /// `.1` (or `::1`) of each /24 or /48, in the order given.
    pub targets: Vec<IpAddr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouterPlan {
    pub router: RouterId,
    pub neighbors: Vec<NeighborPlan>,
}

/// At most `queries` queries per `interval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateLimit {
    pub queries: u32,
    pub interval: Duration,
}

impl RateLimit {
    /// One query every two seconds.
    pub fn live_default() -> RateLimit {
        RateLimit {
            queries: 1,
            interval: Duration::from_secs(2),
        }
    }

    pub fn spacing(&self) -> Duration {
        self.interval / self.queries.max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub near_as: Asn,
    pub routers: Vec<RouterPlan>,
    pub budget: Option<usize>,
    pub rate_limit: Option<RateLimit>,
}

impl QueryPlan {
    pub fn total_targets(&self) -> usize {
        self.routers
            .iter()
            .flat_map(|r| &r.neighbors)
            .map(|n| n.targets.len())
            .sum()
    }
}

/// Plans one `routes` query per eligible prefix. With a summary table for a
/// router only neighbors holding two or more sessions there are planned;
/// without one every neighbor is. Neighbors are ordered by AS number.
pub fn plan_queries(
    near_as: Asn,
    routers: &[RouterId],
    neighbor_prefixes: &BTreeMap<Asn, Vec<Prefix>>,
    summaries: Option<&BTreeMap<String, SummaryTable>>,
) -> Result<QueryPlan, InferenceError> {
    if routers.is_empty() {
        return Err(InferenceError::NoRouters);
    }
    let targets_of = |asn: &Asn| -> Vec<IpAddr> {
        let mut seen = BTreeSet::new();
        neighbor_prefixes
            .get(asn)
            .into_iter()
            .flatten()
            .filter(|p| p.is_probe_size() && seen.insert(**p))
            .map(|p| p.query_target())
            .collect()
    };
    let plans = routers
        .iter()
        .map(|router| {
            let multi: Option<BTreeSet<Asn>> = summaries
                .and_then(|s| s.get(router.name()))
                .map(|t| t.neighbors_with_sessions(2).into_iter().collect());
            let neighbors = neighbor_prefixes
                .keys()
                .filter(|asn| **asn != near_as)
                .filter(|asn| multi.as_ref().is_none_or(|m| m.contains(asn)))
                .map(|asn| NeighborPlan {
                    neighbor_as: *asn,
                    targets: targets_of(asn),
                })
                .filter(|n| !n.targets.is_empty())
                .collect();
            RouterPlan {
                router: router.clone(),
                neighbors,
            }
        })
        .collect();
    Ok(QueryPlan {
        near_as,
        routers: plans,
        budget: None,
        rate_limit: None,
    })
}
