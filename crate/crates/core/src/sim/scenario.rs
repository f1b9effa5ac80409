use std::net::{IpAddr, Ipv4Addr};

use super::config::{
    AnnounceConfig, CaseConfig, LinkConfig, PatternKind, RouterConfig, SourceConfig,
    TopologyConfig,
};
use super::delay::DelayParams;
use crate::ecmp::{splitmix, EcmpAlgorithm};
use crate::model::{Asn, IxpEntry, Prefix};

const SITES: [&str; 10] = ["tor", "hkg", "par", "ams", "fra", "lon", "nyc", "sjc", "tyo", "sin"];
const PATTERNS: [PatternKind; 5] = [
    PatternKind::Split,
    PatternKind::Parallel,
    PatternKind::Merge,
    PatternKind::Complex,
    PatternKind::Unresponsive,
];

/// Knobs for a generated multi-router topology.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub routers: usize,
    pub cases: usize,
    pub prefixes_per_neighbor: usize,
    pub algorithm: EcmpAlgorithm,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 1,
            routers: 5,
            cases: 25,
            prefixes_per_neighbor: 5,
            algorithm: EcmpAlgorithm::IncludePorts,
        }
    }
}

#[derive(Clone, Copy)]
enum Connectivity {
    Ixp,
    Direct,
    Hybrid,
}

fn v4(a: u8, b: u8, c: u8, d: u8) -> IpAddr {
    IpAddr::V4(Ipv4Addr::new(a, b, c, d))
}

/// Builds a near AS (AS6939) with `spec.routers` border routers and plants
/// `spec.cases` cases on them round-robin. In every fifth round a router's
/// case reuses its previous neighbor, so some neighbors carry two planted
/// prefixes. Each router also gets a single-link neighbor and a multi-link
/// neighbor without any case. Link counts cycle through 2, 3 and 4, connectivity through IXP,
/// direct and hybrid, and the planted prefix position through 1..=N.
pub fn generate_scenario(spec: &ScenarioSpec) -> TopologyConfig {
    let near = Asn::new(6939).expect("nonzero");
    let n_routers = spec.routers.clamp(1, SITES.len());
    let per_neighbor = spec.prefixes_per_neighbor.clamp(1, 250);

    let routers: Vec<RouterConfig> = (0..n_routers)
        .map(|i| RouterConfig {
            name: format!("core1.{}1.he.net", SITES[i]),
            asn: near,
            router_id: v4(72, 52, 92, i as u8 + 1),
            ingress_ips: vec![v4(184, 105, i as u8, 1)],
            ecmp: true,
            max_paths: 4,
            algorithm: spec.algorithm,
            salt: None,
        })
        .collect();

    let ixps: Vec<IxpEntry> = (0..n_routers)
        .map(|i| IxpEntry {
            name: format!("{}-IX", SITES[i].to_uppercase()),
            prefixes: vec![Prefix::new(v4(198, 32, 4 * i as u8, 0), 22).expect("valid")],
        })
        .collect();

    let mut links = Vec::new();
    let mut announcements = Vec::new();
    let mut cases = Vec::new();
    let mut next_asn = 10_000u32;
    let mut neighbor_no = 0u16;
    let mut ixp_host = vec![0u16; n_routers];
    let mut direct_host = 0u16;

    let mut add_neighbor = |router: usize, n_links: usize, conn: Connectivity, links: &mut Vec<LinkConfig>, announcements: &mut Vec<AnnounceConfig>| {
        let asn = Asn::new(next_asn).expect("nonzero");
        next_asn += 1 + (splitmix(spec.seed ^ next_asn as u64) % 7) as u32;
        let mut far_ips = Vec::new();
        for k in 0..n_links {
            let ixp = match conn {
                Connectivity::Ixp => true,
                Connectivity::Direct => false,
                Connectivity::Hybrid => k == 0,
            };
            let far_ip = if ixp {
                ixp_host[router] += 1;
                let h = ixp_host[router];
                v4(198, 32, 4 * router as u8 + (h / 250) as u8, (h % 250) as u8 + 2)
            } else {
                direct_host += 1;
                v4(203, 0, (direct_host / 60) as u8, (direct_host % 60) as u8 * 4 + 1)
            };
            far_ips.push(far_ip);
            links.push(LinkConfig {
                near_router: routers[router].name.clone(),
                far_asn: asn,
                far_ip,
                far_router: None,
                near_ip: None,
                bandwidth_gbps: Some(if ixp { 10.0 } else { 100.0 }),
            });
        }
        let base = neighbor_no;
        neighbor_no += 1;
        let prefixes: Vec<Prefix> = (0..per_neighbor)
            .map(|p| Prefix::new(v4(20 + (base / 256) as u8, (base % 256) as u8, p as u8, 0), 24).expect("valid"))
            .collect();
        announcements.push(AnnounceConfig {
            asn,
            prefixes: prefixes.clone(),
        });
        prefixes
    };

    let link_cycle = [2usize, 3, 4, 2, 2];
    let mut last_neighbor: Vec<Option<Vec<Prefix>>> = vec![None; n_routers];
    for c in 0..spec.cases {
        let router = c % n_routers;
        let round = c / n_routers;
        let pattern = PATTERNS[(c + round) % PATTERNS.len()];
        let kth = c % per_neighbor;
        // every fifth round reuses the previous neighbor of the same router
        let prefixes = match (&last_neighbor[router], round % 5 == 4) {
            (Some(prev), true) => prev.clone(),
            _ => {
                let conn = [Connectivity::Ixp, Connectivity::Direct, Connectivity::Hybrid][c % 3];
                add_neighbor(router, link_cycle[c % link_cycle.len()], conn, &mut links, &mut announcements)
            }
        };
        let mut prefix = prefixes[kth];
        if cases.iter().any(|cc: &CaseConfig| cc.prefix == prefix) {
            prefix = prefixes[(kth + 1) % per_neighbor];
        }
        cases.push(CaseConfig {
            router: routers[router].name.clone(),
            prefix,
            far_ips: vec![],
            pattern,
            ibgp: false,
            unreachable_first: false,
        });
        last_neighbor[router] = Some(prefixes);
    }
    for router in 0..n_routers {
        add_neighbor(router, 1, Connectivity::Direct, &mut links, &mut announcements);
        add_neighbor(router, 2, Connectivity::Ixp, &mut links, &mut announcements);
    }

    let sources = (0..n_routers)
        .map(|i| SourceConfig {
            ip: v4(209, 51, i as u8, 5),
            exit_router: routers[i].name.clone(),
            ingress_index: 0,
            intra_hops: None,
        })
        .collect();

    TopologyConfig {
        seed: spec.seed,
        intra_hops: 2,
        delay: DelayParams::default(),
        ases: vec![],
        routers,
        links,
        announcements,
        ixps,
        cases,
        sources,
    }
}
