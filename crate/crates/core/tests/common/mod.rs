#![allow(dead_code)]

use std::cmp::Ordering;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use bgpm_core::bgp::{select_multipath, LearnedVia, Origin, RouteEntry, RoutingTable};
use bgpm_core::lg::{RouterView, Session};
use bgpm_core::model::{Asn, Prefix, RouterId};
use proptest::prelude::*;

pub fn v4() -> impl Strategy<Value = IpAddr> {
    any::<[u8; 4]>().prop_map(|o| IpAddr::V4(Ipv4Addr::from(o)))
}

pub fn any_ip() -> impl Strategy<Value = IpAddr> {
    prop_oneof![
        4 => v4(),
        1 => any::<[u16; 8]>().prop_map(|s| IpAddr::V6(Ipv6Addr::from(s))),
    ]
}

pub fn asn() -> impl Strategy<Value = Asn> {
    prop_oneof![1u32..70_000, 1u32..=u32::MAX].prop_map(|n| Asn::new(n).unwrap())
}

/// Routes for one prefix with narrow attribute ranges, so that ties at every
/// decision step are common.
pub fn route(prefix: Prefix) -> impl Strategy<Value = RouteEntry> {
    (
        prop_oneof![Just(100u32), 90u32..110],
        prop::collection::vec(asn(), 1..4),
        prop::sample::select(vec![Origin::Igp, Origin::Egp, Origin::Incomplete]),
        0u32..3,
        any::<bool>(),
        0u32..3,
        v4(),
        prop_oneof![v4(), any_ip()],
        0u64..20_000_000,
    )
        .prop_map(move |(local_pref, as_path, origin, med, ibgp, igp_metric, next_hop, peer, age)| {
            let mut r = RouteEntry::ebgp(prefix, next_hop, as_path);
            r.local_pref = local_pref;
            r.origin = origin;
            r.med = med;
            r.learned_via = if ibgp { LearnedVia::Ibgp } else { LearnedVia::Ebgp };
            r.igp_metric = igp_metric;
            r.peer_router_id = peer;
            r.age_seconds = age;
            r
        })
}

/// Two routes for the same prefix.
pub fn route_pair() -> impl Strategy<Value = (RouteEntry, RouteEntry)> {
    let p = Prefix::new("142.46.150.0".parse().unwrap(), 24).unwrap();
    (route(p), route(p))
}

fn origin_rank(o: Origin) -> u8 {
    match o {
        Origin::Igp => 0,
        Origin::Egp => 1,
        Origin::Incomplete => 2,
    }
}

fn id_rank(ip: &IpAddr) -> (u8, u128) {
    match ip {
        IpAddr::V4(a) => (4, u32::from(*a) as u128),
        IpAddr::V6(a) => (6, u128::from(*a)),
    }
}

/// Walks the decision steps one at a time. `Less` means `a` is preferred.
pub fn oracle_compare(a: &RouteEntry, b: &RouteEntry) -> Ordering {
    if a.local_pref != b.local_pref {
        return if a.local_pref > b.local_pref { Ordering::Less } else { Ordering::Greater };
    }
    if a.as_path.len() != b.as_path.len() {
        return if a.as_path.len() < b.as_path.len() { Ordering::Less } else { Ordering::Greater };
    }
    if a.origin != b.origin {
        return if origin_rank(a.origin) < origin_rank(b.origin) { Ordering::Less } else { Ordering::Greater };
    }
    if a.med != b.med {
        return if a.med < b.med { Ordering::Less } else { Ordering::Greater };
    }
    if a.learned_via != b.learned_via {
        return if a.learned_via == LearnedVia::Ebgp { Ordering::Less } else { Ordering::Greater };
    }
    if a.igp_metric != b.igp_metric {
        return if a.igp_metric < b.igp_metric { Ordering::Less } else { Ordering::Greater };
    }
    id_rank(&a.peer_router_id).cmp(&id_rank(&b.peer_router_id))
}

pub fn oracle_first_six_equal(a: &RouteEntry, b: &RouteEntry) -> bool {
    a.local_pref == b.local_pref
        && a.as_path.len() == b.as_path.len()
        && a.origin == b.origin
        && a.med == b.med
        && a.learned_via == b.learned_via
        && a.igp_metric == b.igp_metric
}

/// Everything a randomized router view borrows from.
#[derive(Debug, Clone)]
pub struct ViewParts {
    pub name: RouterId,
    pub router_id: IpAddr,
    pub local_as: Asn,
    pub sessions: Vec<Session>,
    pub table: RoutingTable,
    /// One address inside each installed prefix plus one outside all of them.
    pub probes: Vec<IpAddr>,
}

impl ViewParts {
    pub fn view(&self) -> RouterView<'_> {
        RouterView {
            name: &self.name,
            router_id: self.router_id,
            local_as: self.local_as,
            sessions: &self.sessions,
            table: &self.table,
        }
    }
}

fn session() -> impl Strategy<Value = Session> {
    (
        any_ip(),
        asn(),
        0u64..100_000_000,
        prop::sample::select(vec!["ESTAB", "IDLE", "ACTIVE", "CONNECT", "OPEN SENT"]),
    )
        .prop_map(|(neighbor_ip, neighbor_as, uptime_seconds, state)| Session {
            neighbor_ip,
            neighbor_as,
            uptime_seconds,
            state: state.to_string(),
        })
}

fn group(i: u8) -> impl Strategy<Value = Vec<RouteEntry>> {
    let p = Prefix::new(IpAddr::V4(Ipv4Addr::new(20, i, 7, 0)), 24).unwrap();
    prop::collection::vec(route(p), 1..6)
}

pub fn router_view() -> impl Strategy<Value = ViewParts> {
    (
        v4(),
        asn(),
        prop::collection::vec(session(), 0..10),
        prop::collection::vec(group(0), 0..1),
        prop::collection::vec(group(1), 0..2),
        prop::collection::vec(group(2), 0..2),
        1usize..5,
        1u8..10,
    )
        .prop_map(|(router_id, local_as, sessions, g0, g1, g2, max_paths, site)| {
            let mut table = RoutingTable::new();
            let mut probes = Vec::new();
            for routes in g0.iter().chain(&g1).chain(&g2) {
                let g = select_multipath(routes, max_paths).unwrap();
                probes.push(g.dst_prefix().query_target());
                table.install(g);
            }
            probes.push("192.0.2.1".parse().unwrap());
            ViewParts {
                name: RouterId::new(format!("core1.r{site}1.example.net"), local_as).unwrap(),
                router_id,
                local_as,
                sessions,
                table,
                probes,
            }
        })
}
