//! The Looking Glass measurement pipeline: planning `routes` queries,
//! executing them under the stopping rule, cataloging BGP-M cases,
//! classifying their connectivity, aggregating deployment statistics and
//! diffing a catalog against a later epoch.

mod catalog;
mod diff;
mod location;
mod plan;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{
    execute_plan, execute_plan_from, CaseCatalog, CatalogEntry, ExecOptions, ExecutionResult,
    QueryOutcome, QueryRecord, ResumeCursor,
};
pub use diff::{classify_change, diff_cases, ChangeOutcome, ChangeRecord, ChangeSummary};
pub use location::{router_location, site_code, Location, Region};
pub use plan::{derive_neighbors_from_rib, plan_queries, NeighborPlan, QueryPlan, RateLimit, RouterPlan};
pub use stats::{aggregate_stats, region_breakdown, summarize_catalog, CensusRow, DeploymentStats};

use crate::lg::LgError;
use crate::model::{Asn, BgpmCase, IxpDirectory, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("no routers to plan")]
    NoRouters,
    #[error("census has no row for {0} ({1})")]
    MissingCensus(Asn, crate::model::Family),
    #[error("catalog line {line}: {message}")]
    CatalogLine { line: usize, message: String },
    #[error(transparent)]
    Lg(#[from] LgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How a case reaches its far AS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    Ixp,
    Direct,
    Hybrid,
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connectivity::Ixp => "IXP",
            Connectivity::Direct => "Direct",
            Connectivity::Hybrid => "Hybrid",
        })
    }
}

impl FromStr for Connectivity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ixp" => Ok(Connectivity::Ixp),
            "direct" => Ok(Connectivity::Direct),
            "hybrid" => Ok(Connectivity::Hybrid),
            other => Err(format!("unknown connectivity `{other}`")),
        }
    }
}

/// IXP when every far IP lies in an IXP prefix, Direct when none does,
/// Hybrid otherwise.
pub fn classify_connectivity(case: &BgpmCase, dir: &IxpDirectory) -> Connectivity {
    let at_ixp = case.far_ips().iter().filter(|ip| dir.lookup(ip).is_some()).count();
    match at_ixp {
        0 => Connectivity::Direct,
        n if n == case.link_count() => Connectivity::Ixp,
        _ => Connectivity::Hybrid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_prefix, IxpEntry, RouterId};
    use std::net::IpAddr;

    fn case(ips: [&str; 2]) -> BgpmCase {
        let he = Asn::new(6939).unwrap();
        BgpmCase::new(
            he,
            RouterId::new("core1.tyo1.he.net", he).unwrap(),
            Asn::new(2907).unwrap(),
            parse_prefix("160.18.2.0/24").unwrap(),
            ips.iter().map(|s| s.parse::<IpAddr>().unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn connectivity_classes() {
        let dir = IxpDirectory::new(vec![
            IxpEntry {
                name: "JPIX TOKYO".into(),
                prefixes: vec![parse_prefix("210.171.224.0/23").unwrap()],
            },
            IxpEntry {
                name: "JPNAP Tokyo".into(),
                prefixes: vec![parse_prefix("210.173.176.0/23").unwrap()],
            },
        ])
        .unwrap();
        assert_eq!(
            classify_connectivity(&case(["210.171.224.96", "210.173.176.51"]), &dir),
            Connectivity::Ixp
        );
        assert_eq!(
            classify_connectivity(&case(["203.0.113.1", "203.0.113.5"]), &dir),
            Connectivity::Direct
        );
        assert_eq!(
            classify_connectivity(&case(["210.171.224.96", "203.0.113.5"]), &dir),
            Connectivity::Hybrid
        );
    }
}
