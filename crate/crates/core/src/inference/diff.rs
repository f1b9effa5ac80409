use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::catalog::CaseCatalog;
use crate::lg::{detect_multipath, parse_routes_response, LgError, LookingGlass, RoutesResponse};
use crate::model::BgpmCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeOutcome {
    ExactlySame,
    IncreasedLinks,
    SameCountDifferentLinks,
    RouterNotExisting,
    NoRoutes,
    NoMultipathFlag,
    NoEbgpFlag,
    OtherChange,
}

impl ChangeOutcome {
    pub const ALL: [ChangeOutcome; 8] = [
        ChangeOutcome::ExactlySame,
        ChangeOutcome::IncreasedLinks,
        ChangeOutcome::SameCountDifferentLinks,
        ChangeOutcome::RouterNotExisting,
        ChangeOutcome::NoRoutes,
        ChangeOutcome::NoMultipathFlag,
        ChangeOutcome::NoEbgpFlag,
        ChangeOutcome::OtherChange,
    ];

    /// Whether the case still counts as a BGP-M case.
    pub fn is_remaining(self) -> bool {
        matches!(
            self,
            ChangeOutcome::ExactlySame | ChangeOutcome::IncreasedLinks | ChangeOutcome::SameCountDifferentLinks
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            ChangeOutcome::ExactlySame => "Exactly same as before",
            ChangeOutcome::IncreasedLinks => "Increased # of BLs",
            ChangeOutcome::SameCountDifferentLinks => "Same # but different BLs",
            ChangeOutcome::RouterNotExisting => "NearBR 'Not existing'",
            ChangeOutcome::NoRoutes => "'No routes' for DstPrfx",
            ChangeOutcome::NoMultipathFlag => "Status without 'M' (multipath)",
            ChangeOutcome::NoEbgpFlag => "Status without 'E' (eBGP)",
            ChangeOutcome::OtherChange => "Other changes",
        }
    }
}

impl fmt::Display for ChangeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeRecord {
    pub case: BgpmCase,
    pub outcome: ChangeOutcome,
    /// Next hops of the later multipath group, when there is one.
    pub new_far_ips: Option<BTreeSet<IpAddr>>,
}

/// Classifies one later-epoch response for `case`.
pub fn classify_change(case: &BgpmCase, resp: &RoutesResponse) -> (ChangeOutcome, Option<BTreeSet<IpAddr>>) {
    let routes = match resp {
        RoutesResponse::NotExisting => return (ChangeOutcome::RouterNotExisting, None),
        RoutesResponse::NoRoutes => return (ChangeOutcome::NoRoutes, None),
        RoutesResponse::Routes(r) => r,
    };
    if !routes.iter().any(|r| r.has('E')) {
        return (ChangeOutcome::NoEbgpFlag, None);
    }
    if !routes.iter().any(|r| r.has('M')) {
        return (ChangeOutcome::NoMultipathFlag, None);
    }
    let Some(ev) = detect_multipath(routes) else {
        return (ChangeOutcome::OtherChange, None);
    };
    let old = case.far_ips();
    let outcome = if ev.far_as != case.far_as() || ev.dst_prefix != case.dst_prefix() {
        ChangeOutcome::OtherChange
    } else if ev.next_hops == *old {
        ChangeOutcome::ExactlySame
    } else if ev.next_hops.len() > old.len() {
        ChangeOutcome::IncreasedLinks
    } else if ev.next_hops.len() == old.len() {
        ChangeOutcome::SameCountDifferentLinks
    } else {
        ChangeOutcome::OtherChange
    };
    (outcome, Some(ev.next_hops))
}

/// Re-queries every cataloged case at its router and classifies what
/// changed. An unparseable answer counts as `OtherChange`; a transport
/// failure aborts the diff.
pub fn diff_cases<L: LookingGlass>(old: &CaseCatalog, lg: &L) -> Result<Vec<ChangeRecord>, LgError> {
    old.cases()
        .map(|case| {
            let text = lg.routes(case.near_br().name(), case.dst_prefix().query_target())?;
            let (outcome, new_far_ips) = match parse_routes_response(&text) {
                Ok(resp) => classify_change(case, &resp),
                Err(_) => (ChangeOutcome::OtherChange, None),
            };
            Ok(ChangeRecord {
                case: case.clone(),
                outcome,
                new_far_ips,
            })
        })
        .collect()
}

/// Outcome counts split into remaining and disappeared/changed buckets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChangeSummary {
    pub total: usize,
    pub counts: BTreeMap<ChangeOutcome, usize>,
}

impl ChangeSummary {
    pub fn from_records(records: &[ChangeRecord]) -> ChangeSummary {
        let mut counts: BTreeMap<ChangeOutcome, usize> = ChangeOutcome::ALL.iter().map(|o| (*o, 0)).collect();
        for r in records {
            *counts.entry(r.outcome).or_default() += 1;
        }
        ChangeSummary {
            total: records.len(),
            counts,
        }
    }

    pub fn count(&self, o: ChangeOutcome) -> usize {
        self.counts.get(&o).copied().unwrap_or(0)
    }

    pub fn remaining(&self) -> usize {
        ChangeOutcome::ALL.iter().filter(|o| o.is_remaining()).map(|o| self.count(*o)).sum()
    }

    pub fn disappeared(&self) -> usize {
        self.total - self.remaining()
    }

    pub fn render(&self) -> String {
        let mut out = format!("Total # of BGP-M cases\t{}\n", self.total);
        out.push_str(&format!("# of remaining cases\t{}\n", self.remaining()));
        for o in ChangeOutcome::ALL.iter().filter(|o| o.is_remaining()) {
            out.push_str(&format!("  {}\t{}\n", o.label(), self.count(*o)));
        }
        out.push_str(&format!("# of disappeared/changed cases\t{}\n", self.disappeared()));
        for o in ChangeOutcome::ALL.iter().filter(|o| !o.is_remaining()) {
            out.push_str(&format!("  {}\t{}\n", o.label(), self.count(*o)));
        }
        out
    }
}
