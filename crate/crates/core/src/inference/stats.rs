use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::catalog::CaseCatalog;
use super::location::{router_location, Region};
use super::{Connectivity, InferenceError};
use crate::model::{Asn, Family, RouterId};

/// Totals the catalog is measured against: all neighbor ASes and all
/// border routers of `near_as` in one address family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusRow {
    pub near_as: Asn,
    pub family: Family,
    pub neighbors_total: usize,
    pub routers_total: usize,
}

#[derive(Deserialize, Serialize)]
struct RawCensus {
    near_as: u32,
    family: String,
    neighbors_total: usize,
    routers_total: usize,
}

impl CensusRow {
    /// Reads `near_as,family,neighbors_total,routers_total` CSV.
    pub fn read_csv(text: &str) -> Result<Vec<CensusRow>, String> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        rdr.deserialize::<RawCensus>()
            .enumerate()
            .map(|(i, r)| {
                let line = i + 2;
                let r = r.map_err(|e| format!("census line {line}: {e}"))?;
                Ok(CensusRow {
                    near_as: Asn::new(r.near_as).map_err(|e| format!("census line {line}: {e}"))?,
                    family: r.family.parse().map_err(|_| format!("census line {line}: bad family `{}`", r.family))?,
                    neighbors_total: r.neighbors_total,
                    routers_total: r.routers_total,
                })
            })
            .collect()
    }

    pub fn write_csv(rows: &[CensusRow]) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(RawCensus {
                near_as: r.near_as.get(),
                family: r.family.to_string(),
                neighbors_total: r.neighbors_total,
                routers_total: r.routers_total,
            })
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeploymentStats {
    pub near_as: Asn,
    pub family: Family,
    pub cases: usize,
    pub ixp: usize,
    pub direct: usize,
    pub hybrid: usize,
    pub bgpm_neighbors: usize,
    pub neighbors_total: Option<usize>,
    pub bgpm_routers: usize,
    pub routers_total: Option<usize>,
    /// link count → number of cases
    pub link_histogram: BTreeMap<usize, usize>,
}

fn percent(part: usize, whole: Option<usize>) -> Option<f64> {
    whole.filter(|w| *w > 0).map(|w| part as f64 * 100.0 / w as f64)
}

impl DeploymentStats {
    pub fn neighbor_ratio(&self) -> Option<f64> {
        percent(self.bgpm_neighbors, self.neighbors_total)
    }

    pub fn router_ratio(&self) -> Option<f64> {
        percent(self.bgpm_routers, self.routers_total)
    }

    /// Table-shaped rows; ratios print with one decimal or `-` when no
    /// census was available.
    pub fn render(&self) -> String {
        let ratio = |r: Option<f64>| r.map_or("-".to_string(), |r| format!("{r:.1}%"));
        let total = |t: Option<usize>| t.map_or("-".to_string(), |t| t.to_string());
        let hist: Vec<String> = self
            .link_histogram
            .iter()
            .map(|(links, n)| format!("{links}:{n}"))
            .collect();
        format!(
            "{} {}\n\
             # of BGP-M cases\t{}\n\
             IXP / Direct / Hybrid\t{}/{}/{}\n\
             # of neighbour ASes\t{}\n\
             with BGP-M & ratio\t{} ({})\n\
             # of border routers\t{}\n\
             with BGP-M & ratio\t{} ({})\n\
             links per case\t{}\n",
            self.near_as,
            self.family,
            self.cases,
            self.ixp,
            self.direct,
            self.hybrid,
            total(self.neighbors_total),
            self.bgpm_neighbors,
            ratio(self.neighbor_ratio()),
            total(self.routers_total),
            self.bgpm_routers,
            ratio(self.router_ratio()),
            hist.join(" "),
        )
    }
}

fn group(catalog: &CaseCatalog) -> BTreeMap<(Asn, Family), DeploymentStats> {
    let mut out: BTreeMap<(Asn, Family), DeploymentStats> = BTreeMap::new();
    let mut neighbors: BTreeMap<(Asn, Family), BTreeSet<Asn>> = BTreeMap::new();
    let mut routers: BTreeMap<(Asn, Family), BTreeSet<String>> = BTreeMap::new();
    for e in catalog.entries() {
        let key = (e.case.near_as(), e.case.dst_prefix().family());
        let s = out.entry(key).or_insert_with(|| DeploymentStats {
            near_as: key.0,
            family: key.1,
            cases: 0,
            ixp: 0,
            direct: 0,
            hybrid: 0,
            bgpm_neighbors: 0,
            neighbors_total: None,
            bgpm_routers: 0,
            routers_total: None,
            link_histogram: BTreeMap::new(),
        });
        s.cases += 1;
        match e.connectivity {
            Connectivity::Ixp => s.ixp += 1,
            Connectivity::Direct => s.direct += 1,
            Connectivity::Hybrid => s.hybrid += 1,
        }
        *s.link_histogram.entry(e.link_count).or_default() += 1;
        neighbors.entry(key).or_default().insert(e.case.far_as());
        routers.entry(key).or_default().insert(e.case.near_br().name().to_string());
    }
    for (key, s) in out.iter_mut() {
        s.bgpm_neighbors = neighbors[key].len();
        s.bgpm_routers = routers[key].len();
    }
    out
}

/// Per (near AS, family) counts without ratios.
pub fn summarize_catalog(catalog: &CaseCatalog) -> Vec<DeploymentStats> {
    group(catalog).into_values().collect()
}

/// Per (near AS, family) counts with ratios against the census. Every
/// group in the catalog needs a census row.
pub fn aggregate_stats(catalog: &CaseCatalog, census: &[CensusRow]) -> Result<Vec<DeploymentStats>, InferenceError> {
    group(catalog)
        .into_iter()
        .map(|((asn, family), mut s)| {
            let row = census
                .iter()
                .find(|r| r.near_as == asn && r.family == family)
                .ok_or(InferenceError::MissingCensus(asn, family))?;
            s.neighbors_total = Some(row.neighbors_total);
            s.routers_total = Some(row.routers_total);
            Ok(s)
        })
        .collect()
}

/// Routers per region and how many of them appear in the catalog.
pub fn region_breakdown(routers: &[RouterId], catalog: &CaseCatalog) -> BTreeMap<Option<Region>, (usize, usize)> {
    let with: BTreeSet<&str> = catalog.cases().map(|c| c.near_br().name()).collect();
    let mut out: BTreeMap<Option<Region>, (usize, usize)> = BTreeMap::new();
    for r in routers {
        let slot = out.entry(router_location(r).region()).or_default();
        slot.0 += 1;
        if with.contains(r.name()) {
            slot.1 += 1;
        }
    }
    out
}
