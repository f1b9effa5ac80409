use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;
use std::sync::atomic::{AtomicU64, Ordering};

use super::config::{AsRole, PatternKind, TopologyConfig};
use super::delay::DelayParams;
use super::SimError;
use crate::bgp::{
    check_bgpm_conditions, select_multipath, BgpmCheck, LearnedVia, RouteEntry, RouterBgpConfig,
    RoutingTable,
};
use crate::ecmp::{splitmix, EcmpPolicy};
use crate::lg::{
    render_routes_response, render_summary, LgError, LookingGlass, RouterView, RoutesResponse,
    Session,
};
use crate::model::{bits_to_ip, ip_to_bits, Asn, BgpmCase, BorderLink, Family, IxpDirectory, Prefix, RouterId};

/// Sequential address allocator over one v4 and one v6 range.
#[derive(Debug, Clone)]
struct AddrPool {
    v4: u128,
    v6: u128,
}

impl AddrPool {
    fn new(v4: &str, v6: &str) -> AddrPool {
        let v4: IpAddr = v4.parse().expect("pool base");
        let v6: IpAddr = v6.parse().expect("pool base");
        AddrPool {
            v4: ip_to_bits(&v4),
            v6: ip_to_bits(&v6),
        }
    }

    fn next(&mut self, family: Family) -> IpAddr {
        let slot = match family {
            Family::V4 => &mut self.v4,
            Family::V6 => &mut self.v6,
        };
        *slot += 1;
        // skip .0 and .255 so every address looks like a host
        if family == Family::V4 {
            while matches!(*slot & 0xff, 0 | 255) {
                *slot += 1;
            }
        }
        bits_to_ip(family, *slot)
    }
}

/// One downstream hop in the far AS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopTemplate {
    Fixed(IpAddr),
    /// First address for even final octets, second for odd.
    ByParity(IpAddr, IpAddr),
    Silent,
}

impl HopTemplate {
    pub fn resolve(&self, dst: &IpAddr) -> Option<IpAddr> {
        match self {
            HopTemplate::Fixed(ip) => Some(*ip),
            HopTemplate::ByParity(even, odd) => {
                Some(if ip_to_bits(dst) & 1 == 0 { *even } else { *odd })
            }
            HopTemplate::Silent => None,
        }
    }
}

/// How traffic continues inside the far AS after each border link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarasPattern {
    pub kind: PatternKind,
    /// Indexed like the case's far IPs.
    pub internal_hop_plan: Vec<Vec<HopTemplate>>,
}

impl FarasPattern {
    fn build(kind: PatternKind, links: usize, family: Family, pool: &mut AddrPool) -> FarasPattern {
        let mut fresh = || pool.next(family);
        let plan = match kind {
            PatternKind::Split => (0..links)
                .map(|_| {
                    vec![
                        HopTemplate::ByParity(fresh(), fresh()),
                        HopTemplate::Fixed(fresh()),
                    ]
                })
                .collect(),
            PatternKind::Parallel => (0..links)
                .map(|_| vec![HopTemplate::Fixed(fresh()), HopTemplate::Fixed(fresh())])
                .collect(),
            PatternKind::Merge => {
                let mut per_link: Vec<Vec<HopTemplate>> =
                    (0..links).map(|_| vec![HopTemplate::Fixed(fresh())]).collect();
                let common = fresh();
                for hops in &mut per_link {
                    hops.push(HopTemplate::Fixed(common));
                }
                per_link
            }
            PatternKind::Complex => (0..links)
                .map(|i| {
                    if i == 0 {
                        vec![HopTemplate::Fixed(fresh()), HopTemplate::Fixed(fresh())]
                    } else {
                        vec![
                            HopTemplate::Fixed(fresh()),
                            HopTemplate::ByParity(fresh(), fresh()),
                        ]
                    }
                })
                .collect(),
            PatternKind::Unresponsive => (0..links)
                .map(|_| {
                    vec![
                        HopTemplate::Fixed(fresh()),
                        HopTemplate::Silent,
                        HopTemplate::Fixed(fresh()),
                    ]
                })
                .collect(),
        };
        FarasPattern {
            kind,
            internal_hop_plan: plan,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedCase {
    pub case: BgpmCase,
    pub pattern: FarasPattern,
    pub unreachable_first: bool,
}

#[derive(Debug)]
pub struct SimRouter {
    pub id: RouterId,
    pub router_id: IpAddr,
    pub ingress_ips: Vec<IpAddr>,
    pub ecmp_enabled: bool,
    pub max_paths: usize,
    pub policy: EcmpPolicy,
    pub sessions: Vec<Session>,
    pub rib: RoutingTable,
    rr: AtomicU64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimSource {
    pub ip: IpAddr,
    pub exit_router: usize,
    pub near_ip: IpAddr,
    pub intra_hops: Vec<IpAddr>,
}

/// A validated, fully built simulation world.
#[derive(Debug)]
pub struct Topology {
    pub seed: u64,
    pub ases: BTreeMap<Asn, AsRole>,
    pub routers: Vec<SimRouter>,
    pub links: Vec<BorderLink>,
    pub ixp_membership: IxpDirectory,
    pub planted: Vec<PlantedCase>,
    pub sources: Vec<SimSource>,
    pub delay: DelayParams,
    pub announcements: BTreeMap<Asn, Vec<Prefix>>,
    /// Generic hop per far AS for traffic outside planted cases.
    far_as_hops: BTreeMap<Asn, IpAddr>,
}

fn name_hash(seed: u64, text: &str) -> u64 {
    text.bytes()
        .fold(splitmix(seed ^ 0x6e61_6d65), |h, b| splitmix(h ^ b as u64))
}

pub fn build_topology(config: &TopologyConfig) -> Result<Topology, SimError> {
    config.delay.validate()?;
    let mut ingress_pool = AddrPool::new("172.16.0.0", "fd00:172::");
    let mut link_pool = AddrPool::new("198.18.0.0", "fd00:198::");
    let mut far_pool = AddrPool::new("100.64.0.0", "fd00:64::");
    let mut src_pool = AddrPool::new("10.0.0.0", "fd00:10::");

    let mut ases: BTreeMap<Asn, AsRole> = config.ases.iter().map(|a| (a.asn, a.role)).collect();

    let mut routers = Vec::with_capacity(config.routers.len());
    let mut router_index: BTreeMap<&str, usize> = BTreeMap::new();
    for rc in &config.routers {
        if router_index.insert(rc.name.as_str(), routers.len()).is_some() {
            return Err(SimError::DuplicateRouter(rc.name.clone()));
        }
        ases.entry(rc.asn).or_insert(AsRole::Transit);
        let mut ingress_ips = rc.ingress_ips.clone();
        if ingress_ips.is_empty() {
            ingress_ips.push(ingress_pool.next(Family::of(&rc.router_id)));
        }
        routers.push(SimRouter {
            id: RouterId::new(rc.name.clone(), rc.asn)?,
            router_id: rc.router_id,
            ingress_ips,
            ecmp_enabled: rc.ecmp,
            max_paths: rc.max_paths.max(1),
            policy: EcmpPolicy {
                algorithm: rc.algorithm,
                seed: config.seed,
                router_salt: rc.salt.unwrap_or_else(|| name_hash(0, &rc.name)),
            },
            sessions: Vec::new(),
            rib: RoutingTable::new(),
            rr: AtomicU64::new(0),
        });
    }
    let router_of = |name: &str| -> Result<usize, SimError> {
        router_index
            .get(name)
            .copied()
            .ok_or_else(|| SimError::UnknownRouter(name.to_string()))
    };

    // links, and per router the far IPs toward each neighbor in config order
    let mut links = Vec::with_capacity(config.links.len());
    let mut neighbor_links: Vec<BTreeMap<Asn, Vec<IpAddr>>> = vec![BTreeMap::new(); routers.len()];
    let mut seen_links: BTreeSet<(usize, IpAddr)> = BTreeSet::new();
    for (i, lc) in config.links.iter().enumerate() {
        let r = router_of(&lc.near_router)?;
        if !seen_links.insert((r, lc.far_ip)) {
            return Err(SimError::DuplicateLink(lc.near_router.clone(), lc.far_ip));
        }
        ases.entry(lc.far_asn).or_insert(AsRole::Stub);
        let far_name = lc
            .far_router
            .clone()
            .unwrap_or_else(|| format!("br{}.as{}.net", i + 1, lc.far_asn.get()));
        let near_ip = lc
            .near_ip
            .unwrap_or_else(|| link_pool.next(Family::of(&lc.far_ip)));
        links.push(BorderLink::new(
            near_ip,
            lc.far_ip,
            routers[r].id.clone(),
            RouterId::new(far_name, lc.far_asn)?,
            lc.bandwidth_gbps,
        )?);
        neighbor_links[r].entry(lc.far_asn).or_default().push(lc.far_ip);
        let uptime = 60 * (1 + name_hash(config.seed, &format!("{}|{}", lc.near_router, lc.far_ip)) % 86_400);
        routers[r].sessions.push(Session {
            neighbor_ip: lc.far_ip,
            neighbor_as: lc.far_asn,
            uptime_seconds: uptime,
            state: "ESTAB".to_string(),
        });
    }

    let mut announcements: BTreeMap<Asn, Vec<Prefix>> = BTreeMap::new();
    let mut announcer: BTreeMap<Prefix, Asn> = BTreeMap::new();
    for a in &config.announcements {
        ases.entry(a.asn).or_insert(AsRole::Stub);
        for p in &a.prefixes {
            if announcer.insert(*p, a.asn).is_some() {
                return Err(SimError::DuplicateAnnouncement(*p));
            }
            announcements.entry(a.asn).or_default().push(*p);
        }
    }

    // planted cases keyed by (router, prefix)
    let mut planted = Vec::with_capacity(config.cases.len());
    let mut case_at: BTreeMap<(usize, Prefix), usize> = BTreeMap::new();
    let mut ibgp_cases: BTreeSet<(usize, Prefix)> = BTreeSet::new();
    for cc in &config.cases {
        let r = router_of(&cc.router)?;
        let far_as = *announcer.get(&cc.prefix).ok_or(SimError::Unannounced(cc.prefix))?;
        let available = neighbor_links[r].get(&far_as).cloned().unwrap_or_default();
        let far_ips: Vec<IpAddr> = if cc.far_ips.is_empty() {
            available.clone()
        } else {
            cc.far_ips.clone()
        };
        for ip in &far_ips {
            if !available.contains(ip) {
                return Err(SimError::CaseLink {
                    router: cc.router.clone(),
                    prefix: cc.prefix,
                    ip: *ip,
                });
            }
        }
        let case = BgpmCase::new(routers[r].id.owner(), routers[r].id.clone(), far_as, cc.prefix, far_ips)?;
        let pattern = FarasPattern::build(cc.pattern, case.link_count(), cc.prefix.family(), &mut far_pool);
        if cc.ibgp {
            ibgp_cases.insert((r, cc.prefix));
        }
        case_at.insert((r, cc.prefix), planted.len());
        planted.push(PlantedCase {
            case,
            pattern,
            unreachable_first: cc.unreachable_first,
        });
    }

    // RIBs: one route per link per announced prefix. Planted links tie on
    // MED 0, every other link gets a distinct MED so it stays a singleton.
    for (r, router) in routers.iter_mut().enumerate() {
        let mut all_routes = Vec::new();
        for (far_as, far_ips) in &neighbor_links[r] {
            for prefix in announcements.get(far_as).map(Vec::as_slice).unwrap_or(&[]) {
                let case = case_at.get(&(r, *prefix)).map(|i| &planted[*i].case);
                let routes: Vec<RouteEntry> = far_ips
                    .iter()
                    .enumerate()
                    .map(|(k, ip)| {
                        let in_case = case.is_some_and(|c| c.far_ips().contains(ip));
                        let mut route = RouteEntry::ebgp(*prefix, *ip, vec![*far_as]);
                        route.med = if in_case { 0 } else { (k as u32 + 1) * 10 };
                        if in_case && ibgp_cases.contains(&(r, *prefix)) {
                            route.learned_via = LearnedVia::Ibgp;
                        }
                        let age_key = format!("{}|{}|{}", router.id.name(), prefix, ip);
                        route.age_seconds = 60 * (1 + name_hash(config.seed, &age_key) % 57_600);
                        route
                    })
                    .collect();
                let max_paths = if router.ecmp_enabled { router.max_paths } else { 1 };
                router.rib.install(select_multipath(&routes, max_paths)?);
                all_routes.extend(routes);
            }
        }

        let bgp_config = RouterBgpConfig {
            ecmp_enabled: router.ecmp_enabled,
            max_paths: router.max_paths,
            sessions: router.sessions.iter().map(|s| (s.neighbor_as, s.neighbor_ip)).collect(),
            routes: all_routes,
        };
        for pc in planted.iter().filter(|pc| pc.case.near_br() == &router.id) {
            let case = &pc.case;
            if let BgpmCheck::Failed { condition, reason } =
                check_bgpm_conditions(&bgp_config, case.far_as(), case.dst_prefix())?
            {
                return Err(SimError::CaseConditions {
                    router: router.id.name().to_string(),
                    prefix: case.dst_prefix(),
                    condition,
                    reason,
                });
            }
            let installed = router.rib.get(&case.dst_prefix()).map(|g| g.next_hops());
            if installed.as_ref() != Some(case.far_ips()) {
                return Err(SimError::CaseTruncated {
                    router: router.id.name().to_string(),
                    prefix: case.dst_prefix(),
                });
            }
        }
    }

    let mut far_as_hops = BTreeMap::new();
    for asn in ases.keys() {
        let family = announcements
            .get(asn)
            .and_then(|p| p.first())
            .map(|p| p.family())
            .unwrap_or(Family::V4);
        far_as_hops.insert(*asn, far_pool.next(family));
    }

    let mut sources = Vec::with_capacity(config.sources.len());
    for sc in &config.sources {
        let r = router_of(&sc.exit_router)?;
        let near_ip = *routers[r]
            .ingress_ips
            .get(sc.ingress_index)
            .ok_or(SimError::IngressIndex {
                ip: sc.ip,
                index: sc.ingress_index,
            })?;
        let family = Family::of(&sc.ip);
        let intra_hops = (0..sc.intra_hops.unwrap_or(config.intra_hops))
            .map(|_| src_pool.next(family))
            .collect();
        sources.push(SimSource {
            ip: sc.ip,
            exit_router: r,
            near_ip,
            intra_hops,
        });
    }

    Ok(Topology {
        seed: config.seed,
        ases,
        routers,
        links,
        ixp_membership: IxpDirectory::new(config.ixps.clone())?,
        planted,
        sources,
        delay: config.delay,
        announcements,
        far_as_hops,
    })
}

impl Topology {
    pub fn from_config(config: &TopologyConfig) -> Result<Topology, SimError> {
        build_topology(config)
    }

    /// Finds a router by full name or by its site label (`tor1`).
    pub fn router(&self, name: &str) -> Option<&SimRouter> {
        self.routers
            .iter()
            .find(|r| r.id.name() == name)
            .or_else(|| self.routers.iter().find(|r| r.id.short_name() == name))
    }

    pub fn router_index(&self, name: &str) -> Option<usize> {
        self.routers.iter().position(|r| r.id.name() == name)
    }

    pub fn link(&self, router: &RouterId, far_ip: &IpAddr) -> Option<&BorderLink> {
        self.links
            .iter()
            .find(|l| &l.near_router == router && &l.far_ip == far_ip)
    }

    pub fn source(&self, ip: &IpAddr) -> Option<&SimSource> {
        self.sources.iter().find(|s| &s.ip == ip)
    }

    pub fn planted_cases(&self) -> impl Iterator<Item = &BgpmCase> {
        self.planted.iter().map(|p| &p.case)
    }

    pub fn planted_at(&self, router: &RouterId, prefix: &Prefix) -> Option<&PlantedCase> {
        self.planted
            .iter()
            .find(|p| p.case.near_br() == router && &p.case.dst_prefix() == prefix)
    }

    pub(crate) fn far_as_hop(&self, asn: &Asn) -> Option<IpAddr> {
        self.far_as_hops.get(asn).copied()
    }

    pub(crate) fn next_round_robin(&self, router: usize) -> u64 {
        self.routers[router].rr.fetch_add(1, Ordering::Relaxed)
    }

    /// Address to router-name oracle: router ingress and link addresses map
    /// to their router, far IPs to the far router.
    pub fn dns(&self) -> BTreeMap<IpAddr, String> {
        let mut names = BTreeMap::new();
        for r in &self.routers {
            for ip in &r.ingress_ips {
                names.insert(*ip, r.id.name().to_string());
            }
        }
        for l in &self.links {
            names.entry(l.near_ip).or_insert_with(|| l.near_router.name().to_string());
            names.entry(l.far_ip).or_insert_with(|| l.far_router.name().to_string());
        }
        names
    }

    /// Routers the Looking Glass lists, in config order.
    pub fn router_ids(&self) -> Vec<RouterId> {
        self.routers.iter().map(|r| r.id.clone()).collect()
    }
}

/// The read-only router state a Looking Glass exposes, or `None` when the
/// router does not exist.
pub fn lg_snapshot<'a>(topo: &'a Topology, router: &str) -> Option<RouterView<'a>> {
    topo.router(router).map(|r| RouterView {
        name: &r.id,
        router_id: r.router_id,
        local_as: r.id.owner(),
        sessions: &r.sessions,
        table: &r.rib,
    })
}

/// Answers LG queries straight from a simulated topology.
#[derive(Debug, Clone, Copy)]
pub struct SimLookingGlass<'a> {
    pub topo: &'a Topology,
}

impl<'a> SimLookingGlass<'a> {
    pub fn new(topo: &'a Topology) -> Self {
        SimLookingGlass { topo }
    }
}

impl LookingGlass for SimLookingGlass<'_> {
    fn summary(&self, router: &str) -> Result<String, LgError> {
        Ok(match lg_snapshot(self.topo, router) {
            Some(view) => render_summary(&view),
            None => render_routes_response(&RoutesResponse::NotExisting),
        })
    }

    fn routes(&self, router: &str, target: IpAddr) -> Result<String, LgError> {
        Ok(match lg_snapshot(self.topo, router) {
            Some(view) => crate::lg::render_routes_detail(&view, &target),
            None => render_routes_response(&RoutesResponse::NotExisting),
        })
    }
}
