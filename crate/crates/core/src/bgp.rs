//! BGP routes, the best-path decision process and multipath group selection.
//!
//! The decision process compares, in order: highest local preference,
//! shortest AS path, lowest origin, lowest MED, eBGP over iBGP, lowest IGP
//! metric and finally lowest peer router ID. Routes tied on the first six
//! steps are "equal cost" and may be installed together as a multipath group.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::IpAddr;
use std::str::FromStr;

use bitflags::bitflags;
use thiserror::Error;

use crate::model::{ip_to_bits, Asn, Family, Prefix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BgpError {
    #[error("routes for different prefixes cannot be compared ({0} vs {1})")]
    PrefixMismatch(Prefix, Prefix),
    #[error("no routes to select from")]
    NoRoutes,
    #[error("maximum-paths must be at least 1")]
    InvalidMaxPaths,
    #[error("{0} is not a neighbor of this router")]
    UnknownNeighbor(Asn),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Igp,
    Egp,
    Incomplete,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Igp => "igp",
            Origin::Egp => "egp",
            Origin::Incomplete => "incomplete",
        })
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "igp" | "i" => Ok(Origin::Igp),
            "egp" | "e" => Ok(Origin::Egp),
            "incomplete" | "?" => Ok(Origin::Incomplete),
            other => Err(format!("unknown origin `{other}`")),
        }
    }
}

/// How the route was learned. eBGP sorts before iBGP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LearnedVia {
    Ebgp,
    Ibgp,
}

bitflags! {
    /// Route status flags as shown in a Looking Glass status column.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct RouteFlags: u8 {
        const BEST = 0b0001;
        const MULTIPATH = 0b0010;
        const EBGP = 0b0100;
        const LABELED = 0b1000;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RouteEntry {
    pub dst_prefix: Prefix,
    pub next_hop: IpAddr,
    pub local_pref: u32,
    pub as_path: Vec<Asn>,
    pub origin: Origin,
    pub med: u32,
    pub learned_via: LearnedVia,
    pub igp_metric: u32,
    pub peer_router_id: IpAddr,
    pub age_seconds: u64,
    pub flags: RouteFlags,
}

impl RouteEntry {
    /// A plain eBGP route with default attributes; the peer router ID is the
    /// next hop.
    pub fn ebgp(dst_prefix: Prefix, next_hop: IpAddr, as_path: Vec<Asn>) -> RouteEntry {
        RouteEntry {
            dst_prefix,
            next_hop,
            local_pref: 100,
            as_path,
            origin: Origin::Igp,
            med: 0,
            learned_via: LearnedVia::Ebgp,
            igp_metric: 0,
            peer_router_id: next_hop,
            age_seconds: 0,
            flags: RouteFlags::EBGP,
        }
    }

    /// The neighbor AS the route was learned from (first AS on the path).
    pub fn neighbor_as(&self) -> Option<Asn> {
        self.as_path.first().copied()
    }
}

type DecisionKey = (Reverse<u32>, usize, Origin, u32, LearnedVia, u32);

fn decision_key(r: &RouteEntry) -> DecisionKey {
    (
        Reverse(r.local_pref),
        r.as_path.len(),
        r.origin,
        r.med,
        r.learned_via,
        r.igp_metric,
    )
}

fn router_id_key(ip: &IpAddr) -> (Family, u128) {
    (Family::of(ip), ip_to_bits(ip))
}

/// Compares the first six decision steps only. `Less` means `a` is better.
pub fn compare_first_six(a: &RouteEntry, b: &RouteEntry) -> Ordering {
    decision_key(a).cmp(&decision_key(b))
}

/// True when two routes are equal cost, i.e. tie before the router-ID step.
pub fn ties_on_first_six(a: &RouteEntry, b: &RouteEntry) -> bool {
    compare_first_six(a, b) == Ordering::Equal
}

/// Full decision process. `Less` means `a` is preferred over `b`; `Equal`
/// means the routes tie through all seven steps.
pub fn compare_routes(a: &RouteEntry, b: &RouteEntry) -> Result<Ordering, BgpError> {
    if a.dst_prefix != b.dst_prefix {
        return Err(BgpError::PrefixMismatch(a.dst_prefix, b.dst_prefix));
    }
    Ok(compare_first_six(a, b)
        .then_with(|| router_id_key(&a.peer_router_id).cmp(&router_id_key(&b.peer_router_id))))
}

/// The routes installed for one prefix. `members[0]` is always the best route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultipathGroup {
    dst_prefix: Prefix,
    members: Vec<RouteEntry>,
}

impl MultipathGroup {
    pub fn dst_prefix(&self) -> Prefix {
        self.dst_prefix
    }

    pub fn best(&self) -> &RouteEntry {
        &self.members[0]
    }

    pub fn members(&self) -> &[RouteEntry] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_multipath(&self) -> bool {
        self.members.len() >= 2
    }

    pub fn next_hops(&self) -> BTreeSet<IpAddr> {
        self.members.iter().map(|r| r.next_hop).collect()
    }

    pub fn members_mut(&mut self) -> impl Iterator<Item = &mut RouteEntry> {
        self.members.iter_mut()
    }
}

/// Picks the best route and every equal-cost alternative with a distinct
/// next hop, up to `max_paths` routes (lowest peer router ID first).
pub fn select_multipath(
    routes: &[RouteEntry],
    max_paths: usize,
) -> Result<MultipathGroup, BgpError> {
    if max_paths == 0 {
        return Err(BgpError::InvalidMaxPaths);
    }
    let first = routes.first().ok_or(BgpError::NoRoutes)?;
    let mut best = first;
    for r in &routes[1..] {
        if compare_routes(r, best)? == Ordering::Less {
            best = r;
        }
    }

    let mut others: Vec<&RouteEntry> = routes
        .iter()
        .filter(|r| !std::ptr::eq(*r, best) && ties_on_first_six(r, best))
        .collect();
    others.sort_by(|a, b| {
        router_id_key(&a.peer_router_id)
            .cmp(&router_id_key(&b.peer_router_id))
            .then(router_id_key(&a.next_hop).cmp(&router_id_key(&b.next_hop)))
    });

    let mut seen: BTreeSet<IpAddr> = BTreeSet::from([best.next_hop]);
    let mut members = vec![best.clone()];
    for r in others {
        if members.len() >= max_paths {
            break;
        }
        if seen.insert(r.next_hop) {
            members.push(r.clone());
        }
    }

    let multipath = members.len() >= 2;
    for (i, m) in members.iter_mut().enumerate() {
        m.flags.remove(RouteFlags::BEST | RouteFlags::MULTIPATH | RouteFlags::EBGP);
        m.flags.set(RouteFlags::BEST, i == 0);
        m.flags.set(RouteFlags::MULTIPATH, multipath);
        m.flags.set(RouteFlags::EBGP, m.learned_via == LearnedVia::Ebgp);
    }
    Ok(MultipathGroup {
        dst_prefix: first.dst_prefix,
        members,
    })
}

/// What a border router knows that decides whether BGP-M can be deployed.
#[derive(Debug, Clone, Default)]
pub struct RouterBgpConfig {
    pub ecmp_enabled: bool,
    pub max_paths: usize,
    /// (neighbor AS, far end address) for each border link / session.
    pub sessions: Vec<(Asn, IpAddr)>,
    pub routes: Vec<RouteEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BgpmCheck {
    Satisfied,
    /// `condition` is the first of the four deployment conditions that fails.
    Failed { condition: u8, reason: &'static str },
}

impl BgpmCheck {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, BgpmCheck::Satisfied)
    }
}

/// Evaluates the four BGP-M deployment conditions for `neighbor` and
/// `prefix`: ECMP support, multiple links to the neighbor, multiple routes
/// learned over different links, and equal first-six attributes.
pub fn check_bgpm_conditions(
    config: &RouterBgpConfig,
    neighbor: Asn,
    prefix: Prefix,
) -> Result<BgpmCheck, BgpError> {
    let links: BTreeSet<IpAddr> = config
        .sessions
        .iter()
        .filter(|(asn, _)| *asn == neighbor)
        .map(|(_, ip)| *ip)
        .collect();
    if links.is_empty() {
        return Err(BgpError::UnknownNeighbor(neighbor));
    }
    if !config.ecmp_enabled || config.max_paths < 2 {
        return Ok(BgpmCheck::Failed {
            condition: 1,
            reason: "ECMP not enabled",
        });
    }
    if links.len() < 2 {
        return Ok(BgpmCheck::Failed {
            condition: 2,
            reason: "fewer than two border links to the neighbor",
        });
    }
    let learned: Vec<RouteEntry> = config
        .routes
        .iter()
        .filter(|r| r.dst_prefix == prefix && links.contains(&r.next_hop))
        .cloned()
        .collect();
    let distinct: BTreeSet<IpAddr> = learned.iter().map(|r| r.next_hop).collect();
    if distinct.len() < 2 {
        return Ok(BgpmCheck::Failed {
            condition: 3,
            reason: "fewer than two routes learned over different links",
        });
    }
    if !select_multipath(&learned, usize::MAX)?.is_multipath() {
        return Ok(BgpmCheck::Failed {
            condition: 4,
            reason: "routes differ in the first six attributes",
        });
    }
    Ok(BgpmCheck::Satisfied)
}

/// Installed groups keyed by prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoutingTable {
    groups: BTreeMap<Prefix, MultipathGroup>,
}

impl RoutingTable {
    pub fn new() -> RoutingTable {
        RoutingTable::default()
    }

    /// Installs `group`, replacing any previous group for its prefix.
    pub fn install(&mut self, group: MultipathGroup) -> Option<MultipathGroup> {
        self.groups.insert(group.dst_prefix, group)
    }

    pub fn remove(&mut self, prefix: &Prefix) -> Option<MultipathGroup> {
        self.groups.remove(prefix)
    }

    pub fn get(&self, prefix: &Prefix) -> Option<&MultipathGroup> {
        self.groups.get(prefix)
    }

    pub fn get_mut(&mut self, prefix: &Prefix) -> Option<&mut MultipathGroup> {
        self.groups.get_mut(prefix)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> impl Iterator<Item = &MultipathGroup> {
        self.groups.values()
    }

    /// Longest-prefix match.
    pub fn lookup(&self, ip: &IpAddr) -> Option<&MultipathGroup> {
        let family = Family::of(ip);
        (0..=family.max_len()).rev().find_map(|len| {
            let p = Prefix::new(*ip, len).ok()?;
            self.groups.get(&p)
        })
    }
}
