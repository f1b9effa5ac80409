//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::net::{IpAddr, Ipv4Addr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use bgpm_core::analysis::{
    build_routing_map, classify_allocation, classify_faras, delay_stats, link_delay, percentile, validate_path,
    AllocationClass, DelaySeries, FarasClass, GroupBy, Rejection, RoutingMap, ValidatedPath,
};
use bgpm_core::bgp::{compare_routes, select_multipath};
use bgpm_core::ecmp::{universal_parity, EcmpAlgorithm, Protocol};
use bgpm_core::inference::{
    aggregate_stats, classify_connectivity, diff_cases, execute_plan, plan_queries, region_breakdown, CaseCatalog,
    CensusRow, ChangeOutcome, ChangeSummary, Connectivity, ExecOptions, Region,
};
use bgpm_core::io::{read_ixp_directory, read_neighbor_prefixes};
use bgpm_core::lg::{
    parse_routes_response, parse_summary, render_routes_detail, render_routes_response, render_summary,
    CountingLookingGlass, FixtureCorpus, LookingGlass, SummaryTable,
};
use bgpm_core::model::{Asn, BgpmCase, Prefix, RouterId};
use bgpm_core::sim::{
    build_topology, generate_scenario, measurement_ticks, run_campaign, DelayModel, LinkConfig, Mutation,
    PatternKind, ProbeSpec, ScenarioSpec, SimLookingGlass, SimTrace, SourceConfig, Topology, TopologyConfig,
    DEFAULT_START, TICK_SECONDS,
};
use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn he() -> Asn {
    Asn::new(6939).unwrap()
}

fn ticks() -> Vec<u64> {
    measurement_ticks(DEFAULT_START, 3, TICK_SECONDS)
}

fn summaries(topo: &Topology, lg: &impl LookingGlass) -> BTreeMap<String, SummaryTable> {
    topo.router_ids()
        .iter()
        .map(|r| (r.name().to_string(), parse_summary(&lg.summary(r.name()).unwrap()).unwrap()))
        .collect()
}

fn one_case_config(seed: u64, pattern: PatternKind) -> TopologyConfig {
    let mut cfg = generate_scenario(&ScenarioSpec {
        seed,
        routers: 1,
        cases: 1,
        prefixes_per_neighbor: 2,
        algorithm: EcmpAlgorithm::IncludePorts,
    });
    cfg.cases[0].pattern = pattern;
    cfg
}

struct Epoch {
    map: RoutingMap,
    paths: Vec<ValidatedPath>,
    traces: Vec<SimTrace>,
}

fn epoch(topo: &Topology, case: &BgpmCase, src: IpAddr, proto: Protocol, t: u64, delays: &DelayModel) -> Epoch {
    let dns = topo.dns();
    let traces = run_campaign(topo, src, &case.dst_prefix(), proto, t, delays).unwrap();
    let paths: Vec<ValidatedPath> = traces
        .iter()
        .filter_map(|s| validate_path(&s.record, case, &dns).ok())
        .collect();
    let mut map = build_routing_map(case, t, &paths).unwrap();
    map.src = Some(src);
    Epoch { map, paths, traces }
}

fn runs(map: &RoutingMap) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut last = None;
    for idx in map.assignment.values() {
        if Some(idx) == last {
            *out.last_mut().unwrap() += 1;
        } else {
            out.push(1);
            last = Some(idx);
        }
    }
    out
}

fn c1_closed_loop() -> Outcome {
    let started = Instant::now();
    let topo = build_topology(&generate_scenario(&ScenarioSpec::default())).map_err(|e| e.to_string())?;
    let lg = SimLookingGlass::new(&topo);
    let sums = summaries(&topo, &lg);
    let plan = plan_queries(he(), &topo.router_ids(), &topo.announcements, Some(&sums)).unwrap();
    let res = execute_plan(&plan, &lg, &topo.ixp_membership, &ExecOptions::default());
    let elapsed = started.elapsed().as_secs_f64();
    ensure!(res.error.is_none(), "LG error {:?}", res.error);

    let planted: BTreeSet<(String, Asn)> = topo
        .planted_cases()
        .map(|c| (c.near_br().name().to_string(), c.far_as()))
        .collect();
    let found: BTreeSet<(String, Asn)> = res
        .catalog
        .cases()
        .map(|c| (c.near_br().name().to_string(), c.far_as()))
        .collect();
    let truth: BTreeSet<&BgpmCase> = topo.planted_cases().collect();
    let false_pos = res.catalog.cases().filter(|c| !truth.contains(c)).count();
    ensure!(topo.planted.len() == 25, "{} planted cases", topo.planted.len());
    ensure!(found == planted, "recovered {} of {} pairs", found.intersection(&planted).count(), planted.len());
    ensure!(false_pos == 0, "{false_pos} false positives");
    let links: BTreeSet<usize> = topo.planted_cases().map(|c| c.link_count()).collect();
    let conns: BTreeSet<Connectivity> = res.catalog.entries().iter().map(|e| e.connectivity).collect();
    ensure!(links.len() == 3 && conns.len() == 3, "mix not covered: links {links:?} connectivity {conns:?}");
    ensure!(elapsed < 10.0, "took {elapsed:.2}s");
    Ok(format!(
        "{}/{} (router, neighbor) pairs, 0 false positives, {:.2}s",
        found.len(),
        planted.len(),
        elapsed
    ))
}

fn c2_stopping_rule() -> Outcome {
    let topo = build_topology(&generate_scenario(&ScenarioSpec::default())).unwrap();
    let lg = CountingLookingGlass::new(SimLookingGlass::new(&topo));
    let plan = plan_queries(he(), &topo.router_ids(), &topo.announcements, None).unwrap();
    let res = execute_plan(&plan, &lg, &topo.ixp_membership, &ExecOptions::default());
    ensure!(lg.routes_queries() == res.queries.len(), "query log disagrees with instrumentation");
    let mut ks = BTreeSet::new();
    for c in topo.planted_cases() {
        let prefixes = &topo.announcements[&c.far_as()];
        let k = prefixes
            .iter()
            .position(|p| topo.planted_at(c.near_br(), p).is_some())
            .unwrap()
            + 1;
        let spent = res.queries_for(c.near_br().name(), c.far_as());
        ensure!(spent == k, "{c}: {spent} queries for k = {k}");
        ks.insert(k);
    }
    Ok(format!("{} pairs, k in {:?}, {} routes queries", topo.planted.len(), ks, lg.routes_queries()))
}

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn c3_census() -> Outcome {
    let catalog = CaseCatalog::from_jsonl(&fixture("he_catalog.jsonl")).map_err(|e| e.to_string())?;
    let census = CensusRow::read_csv(&fixture("he_census.csv")).map_err(|e| e.to_string())?;
    let dir = read_ixp_directory(&fixture("he_ixp.csv")).map_err(|e| e.to_string())?;
    for e in catalog.entries() {
        ensure!(classify_connectivity(&e.case, &dir) == e.connectivity, "{} connectivity mismatch", e.case);
    }
    let stats = aggregate_stats(&catalog, &census).map_err(|e| e.to_string())?;
    ensure!(stats.len() == 1, "{} groups", stats.len());
    let s = &stats[0];
    let split = (s.ixp, s.direct, s.hybrid);
    ensure!(split == (1006, 68, 14) && s.cases == 1088, "split {split:?} of {}", s.cases);
    let nr = format!("{:.1}", s.neighbor_ratio().unwrap());
    let rr = format!("{:.1}", s.router_ratio().unwrap());
    ensure!(s.bgpm_neighbors == 611 && s.neighbors_total == Some(5868) && nr == "10.4", "neighbors {} ({nr}%)", s.bgpm_neighbors);
    ensure!(s.bgpm_routers == 69 && s.routers_total == Some(112) && rr == "61.6", "routers {} ({rr}%)", s.bgpm_routers);
    let hist: Vec<(usize, usize)> = s.link_histogram.iter().map(|(k, v)| (*k, *v)).collect();
    ensure!(hist == vec![(2, 911), (3, 92), (4, 85)], "histogram {hist:?}");

    let routers: Vec<RouterId> = fixture("he_routers.txt")
        .lines()
        .map(|n| RouterId::new(n, he()).unwrap())
        .collect();
    let regions = region_breakdown(&routers, &catalog);
    let want = [
        (Some(Region::NorthAmerica), (55, 33)),
        (Some(Region::Europe), (40, 27)),
        (Some(Region::Asia), (6, 4)),
        (Some(Region::Other), (11, 5)),
    ];
    for (r, v) in want {
        ensure!(regions.get(&r) == Some(&v), "region {r:?}: {:?}", regions.get(&r));
    }
    Ok(format!(
        "split {}/{}/{} = {}, neighbors {}/{} = {nr}%, routers {}/{} = {rr}%, links 911/92/85",
        s.ixp, s.direct, s.hybrid, s.cases, s.bgpm_neighbors, 5868, s.bgpm_routers, 112
    ))
}

/// A one-case topology with a second source of opposite universal parity.
fn two_source_topology(seed: u64) -> (Topology, IpAddr, IpAddr) {
    let mut cfg = one_case_config(seed, PatternKind::Parallel);
    let base = build_topology(&cfg).unwrap();
    let router = &base.routers[0];
    let src = base.sources[0].ip;
    let parity = universal_parity(&src, &router.policy);
    let other = (1..=254u8)
        .map(|k| IpAddr::V4(Ipv4Addr::new(209, 51, 200, k)))
        .find(|ip| universal_parity(ip, &router.policy) != parity)
        .expect("some address has the other parity");
    cfg.sources.push(SourceConfig {
        ip: other,
        exit_router: router.id.name().to_string(),
        ingress_index: 0,
        intra_hops: None,
    });
    (build_topology(&cfg).unwrap(), src, other)
}

fn c4_universal() -> Outcome {
    let ticks = ticks();
    for seed in 0..20u64 {
        let (topo, a, b) = two_source_topology(seed);
        let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
        let case = topo.planted[0].case.clone();
        ensure!(case.link_count() == 2, "seed {seed}: {} links", case.link_count());
        let mut first: [Option<RoutingMap>; 2] = [None, None];
        for &t in &ticks {
            let ma = epoch(&topo, &case, a, Protocol::Icmp, t, &delays).map;
            let mb = epoch(&topo, &case, b, Protocol::Icmp, t, &delays).map;
            for (slot, m) in [(0, &ma), (1, &mb)] {
                ensure!(m.len() == 254, "seed {seed} t {t}: {} destinations mapped", m.len());
                let counts = m.link_counts();
                ensure!(counts.iter().all(|c| c.abs_diff(127) <= 2), "seed {seed} t {t}: counts {counts:?}");
                let r = runs(m);
                let interior_ok = r[1..r.len() - 1].iter().all(|l| *l == 4);
                ensure!(r.len() >= 3 && interior_ok && r[0] <= 4 && r[r.len() - 1] <= 4, "seed {seed} t {t}: runs {r:?}");
                match &first[slot] {
                    None => first[slot] = Some(m.clone()),
                    Some(f) => ensure!(f.assignment == m.assignment, "seed {seed}: map at {t} differs from the first tick"),
                }
            }
            let complementary = ma.assignment.iter().all(|(d, i)| mb.assignment.get(d) == Some(&(1 - i)));
            ensure!(complementary, "seed {seed} t {t}: sources {a} and {b} not complementary");
        }
    }
    Ok(format!("20 seeds x {} ticks x 2 sources: 127+-2 split, runs of 4, complementary, time-stable", ticks.len()))
}

fn c5_include_ports() -> Outcome {
    let ticks = ticks();
    let sigma3 = 3.0 * (254.0f64 * 0.25).sqrt();
    let (mut within, mut total) = (0usize, 0usize);
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let topo = build_topology(&one_case_config(seed, PatternKind::Parallel)).unwrap();
        let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
        let case = topo.planted[0].case.clone();
        let src = topo.sources[0].ip;
        let maps: Vec<RoutingMap> = ticks
            .iter()
            .map(|t| epoch(&topo, &case, src, Protocol::Udp, *t, &delays).map)
            .collect();
        for w in maps.windows(2) {
            ensure!(w[0].assignment != w[1].assignment, "seed {seed}: maps at {} and {} identical", w[0].time, w[1].time);
        }
        for m in &maps {
            let dev = (m.link_counts()[0] as f64 - 127.0).abs();
            worst = worst.max(dev);
            total += 1;
            within += (dev <= sigma3) as usize;
        }
        let class = classify_allocation(&maps, None);
        ensure!(class == AllocationClass::PerFlowIncludePorts, "seed {seed}: classified {class}");
    }
    // A 3 sigma band holds 99.73% of binomial draws; demanding it of every
    // one of thousands of maps would fail on a correct hash.
    let frac = within as f64 / total as f64;
    ensure!(frac >= 0.99, "{within}/{total} maps within 3 sigma");
    Ok(format!(
        "20 seeds: consecutive maps differ, {within}/{total} maps within 127+-{sigma3:.1} (worst {worst:.0}), all per-flow-include-ports"
    ))
}

fn c6_delay() -> Outcome {
    let topo = build_topology(&one_case_config(0, PatternKind::Parallel)).unwrap();
    let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
    let case = topo.planted[0].case.clone();
    let src = topo.sources[0].ip;
    let dns = topo.dns();
    let mut paths = Vec::new();
    let mut max_err = 0.0f64;
    let mut compared = 0usize;
    for &t in &ticks()[..288] {
        for proto in [Protocol::Icmp, Protocol::Udp] {
            let e = epoch(&topo, &case, src, proto, t, &delays);
            for s in &e.traces {
                let (Some(truth), Ok(v)) = (s.truth, validate_path(&s.record, &case, &dns)) else {
                    continue;
                };
                let d = link_delay(&v).map_err(|e| e.to_string())?;
                max_err = max_err.max((d.ms - truth.link_delay_ms).abs());
                compared += 1;
            }
            if proto == Protocol::Icmp {
                paths.extend(e.paths);
            }
        }
    }
    ensure!(compared == 288 * 254 * 2, "{compared} traces compared");
    ensure!(max_err <= 1e-6, "max error {max_err:e} ms");
    let (series, _) = DelaySeries::from_paths(&paths);
    let groups = delay_stats(&series, GroupBy::Dst);
    ensure!(groups.len() == 254, "{} per-dst groups", groups.len());
    let bad = groups.values().filter(|s| s.count != 288).count();
    ensure!(bad == 0, "{bad} per-dst groups without 288 samples");
    let mut values = series.values();
    values.sort_by(f64::total_cmp);
    let median = percentile(&values, 0.5);
    let under = values.iter().filter(|v| **v <= 340.0).count() as f64 / values.len() as f64;
    ensure!((20.0..=40.0).contains(&median), "median {median:.2} ms");
    ensure!(under >= 0.95, "{:.2}% <= 340 ms", under * 100.0);
    Ok(format!(
        "max |error| {max_err:.1e} ms over {compared} traces, 254 dst groups x 288, median {median:.2} ms, {:.2}% <= 340 ms",
        under * 100.0
    ))
}

fn c7_validation() -> Outcome {
    let mut cfg = generate_scenario(&ScenarioSpec {
        seed: 5,
        routers: 2,
        cases: 1,
        prefixes_per_neighbor: 2,
        algorithm: EcmpAlgorithm::IncludePorts,
    });
    let base = build_topology(&cfg).unwrap();
    let case = base.planted[0].case.clone();
    let other = base.routers.iter().find(|r| r.id != *case.near_br()).unwrap().id.name().to_string();
    for ip in case.far_ips() {
        cfg.links.push(LinkConfig {
            near_router: other.clone(),
            far_asn: case.far_as(),
            far_ip: *ip,
            far_router: None,
            near_ip: None,
            bandwidth_gbps: None,
        });
    }
    let topo = build_topology(&cfg).map_err(|e| e.to_string())?;
    let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
    let dns = topo.dns();
    let near_src = topo.sources.iter().find(|s| topo.routers[s.exit_router].id == *case.near_br()).unwrap().ip;
    let far_src = topo.sources.iter().find(|s| topo.routers[s.exit_router].id.name() == other).unwrap().ip;

    let mut traces = Vec::new();
    for src in [near_src, far_src] {
        traces.extend(run_campaign(&topo, src, &case.dst_prefix(), Protocol::Icmp, DEFAULT_START, &delays).unwrap());
        let stray = ProbeSpec::new(src, "192.0.2.9".parse().unwrap(), Protocol::Icmp, DEFAULT_START);
        traces.push(topo.trace(&stray, &delays).unwrap());
    }
    // one trace whose near hop did not answer
    let mut silent = traces[0].clone();
    let far_hop = silent.record.hops.iter().position(|h| h.ip.is_some_and(|ip| case.far_ips().contains(&ip))).unwrap();
    silent.record.hops[far_hop - 1].ip = None;
    silent.record.hops[far_hop - 1].rtts.clear();
    traces.push(silent);

    let reaches_far = traces
        .iter()
        .filter(|t| t.record.hops.iter().any(|h| h.ip.is_some_and(|ip| case.far_ips().contains(&ip))))
        .count();
    let from_other = traces
        .iter()
        .filter(|t| t.record.probe.src == far_src)
        .filter(|t| t.record.hops.iter().any(|h| h.ip.is_some_and(|ip| case.far_ips().contains(&ip))))
        .count();
    ensure!(from_other == 254, "only {from_other} traces from the other router cross the shared far IPs");

    let mut accepted = 0;
    let mut reasons: BTreeMap<Rejection, usize> = BTreeMap::new();
    for t in &traces {
        match validate_path(&t.record, &case, &dns) {
            Ok(v) => {
                ensure!(t.record.probe.src == near_src, "accepted a trace from {}", t.record.probe.src);
                ensure!(v.near_br == *case.near_br(), "accepted path attributed to {}", v.near_br);
                accepted += 1;
            }
            Err(r) => *reasons.entry(r).or_default() += 1,
        }
    }
    let rejected: usize = reasons.values().sum();
    ensure!(accepted + rejected == traces.len(), "outcomes do not partition the traces");
    ensure!(accepted == 254, "{accepted} accepted");
    ensure!(reasons.get(&Rejection::WrongNearBr) == Some(&254), "wrong-near-br {:?}", reasons.get(&Rejection::WrongNearBr));
    ensure!(reasons.get(&Rejection::NoFarIp) == Some(&2), "no-far-ip {:?}", reasons.get(&Rejection::NoFarIp));
    ensure!(
        reasons.get(&Rejection::UnresolvablePredecessor) == Some(&1),
        "unresolvable {:?}",
        reasons.get(&Rejection::UnresolvablePredecessor)
    );
    Ok(format!(
        "{} traces: far-IP match alone keeps {reaches_far}; predecessor check keeps {accepted}, rejects {reasons:?}",
        traces.len()
    ))
}

fn deterministic(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn tor1_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/tor1")
}

fn c8_parsers() -> Outcome {
    let mut runner = deterministic(1000);
    runner
        .run(&router_view(), |parts| {
            let text = render_summary(&parts.view());
            prop_assert_eq!(parse_summary(&text).unwrap().render(), text);
            for dst in &parts.probes {
                let text = render_routes_detail(&parts.view(), dst);
                prop_assert_eq!(render_routes_response(&parse_routes_response(&text).unwrap()), text);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;

    let corpus = FixtureCorpus::load_dir(&tor1_dir()).map_err(|e| e.to_string())?;
    let prefixes = read_neighbor_prefixes(&std::fs::read_to_string(tor1_dir().join("prefixes.csv")).unwrap()).unwrap();
    let name = "core1.tor1.he.net";
    let summary = parse_summary(&corpus.summary(name).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(summary.neighbors_with_sessions(2) == vec![Asn::new(19752).unwrap()], "multi-session neighbors");
    let sums = BTreeMap::from([(name.to_string(), summary)]);
    let router = RouterId::new(name, he()).unwrap();
    let plan = plan_queries(he(), &[router.clone()], &prefixes, Some(&sums)).unwrap();
    let res = execute_plan(&plan, &corpus, &Default::default(), &ExecOptions::default());
    let expected = BgpmCase::new(
        he(),
        router,
        Asn::new(19752).unwrap(),
        "142.46.150.0/24".parse::<Prefix>().unwrap(),
        ["198.32.181.46".parse().unwrap(), "206.108.34.48".parse().unwrap()],
    )
    .unwrap();
    let cases: Vec<&BgpmCase> = res.catalog.cases().collect();
    ensure!(cases == vec![&expected], "fixture cases {cases:?}");
    Ok(format!("1000 views byte-identical for summary and routes; fixtures give {expected}"))
}

fn c9_farside() -> Outcome {
    let expected = [
        (PatternKind::Split, FarasClass::SplitPerLink),
        (PatternKind::Parallel, FarasClass::Parallel),
        (PatternKind::Merge, FarasClass::Merge),
        (PatternKind::Complex, FarasClass::Complex),
        (PatternKind::Unresponsive, FarasClass::Unresponsive),
    ];
    let times: Vec<u64> = ticks().into_iter().take(4).collect();
    for seed in 0..5u64 {
        let mut reference: Option<Vec<BTreeMap<IpAddr, usize>>> = None;
        for (pattern, class) in expected {
            let topo = build_topology(&one_case_config(seed, pattern)).unwrap();
            let delays = DelayModel::new(topo.delay, topo.seed).unwrap();
            let case = topo.planted[0].case.clone();
            let src = topo.sources[0].ip;
            let mut maps = Vec::new();
            let mut choices = Vec::new();
            for &t in &times {
                for proto in [Protocol::Icmp, Protocol::Udp] {
                    let e = epoch(&topo, &case, src, proto, t, &delays);
                    choices.push(e.map.assignment.clone());
                    maps.push(e.map);
                }
            }
            let got = classify_faras(&maps);
            ensure!(got == class, "seed {seed} {pattern:?}: classified {got}");
            match &reference {
                None => reference = Some(choices),
                Some(r) => ensure!(*r == choices, "seed {seed} {pattern:?}: border-link choice changed with the farside"),
            }
        }
    }
    Ok("5 seeds x 5 patterns classified; link choice identical across patterns".into())
}

fn c10_diff() -> Outcome {
    let cfg = generate_scenario(&ScenarioSpec::default());
    let before = build_topology(&cfg).unwrap();
    let lg = SimLookingGlass::new(&before);
    let plan = plan_queries(he(), &before.router_ids(), &before.announcements, None).unwrap();
    let opts = ExecOptions {
        exhaustive: true,
        ..ExecOptions::default()
    };
    let catalog = execute_plan(&plan, &lg, &before.ixp_membership, &opts).catalog;
    ensure!(catalog.len() == 25, "baseline catalog has {} cases", catalog.len());

    // cases 0..15 sit on neighbors with a single planted prefix
    let case = |i: usize| -> BgpmCase {
        let c = &cfg.cases[i];
        before
            .planted
            .iter()
            .find(|p| p.case.near_br().name() == c.router && p.case.dst_prefix() == c.prefix)
            .unwrap()
            .case
            .clone()
    };
    let far = |c: &BgpmCase, i: usize| c.far_ip_at(i).unwrap();
    let removed = cfg.routers[4].name.clone();
    let (c0, c1, c3, c5, c8, c10) = (case(0), case(1), case(3), case(5), case(8), case(10));
    ensure!(c1.link_count() == 3, "drop-link case has {} links", c1.link_count());
    let mutations = vec![
        Mutation::RemoveRouter { router: removed.clone() },
        Mutation::AddLink {
            router: c0.near_br().name().into(),
            prefix: c0.dst_prefix(),
            far_ip: "203.0.200.1".parse().unwrap(),
        },
        Mutation::ReplaceLink {
            router: c5.near_br().name().into(),
            prefix: c5.dst_prefix(),
            old: far(&c5, 0),
            new: "203.0.200.5".parse().unwrap(),
        },
        Mutation::WithdrawPrefix { prefix: c10.dst_prefix() },
        Mutation::RemoveCase {
            router: c3.near_br().name().into(),
            prefix: c3.dst_prefix(),
        },
        Mutation::CaseViaIbgp {
            router: c8.near_br().name().into(),
            prefix: c8.dst_prefix(),
        },
        Mutation::DropLink {
            router: c1.near_br().name().into(),
            prefix: c1.dst_prefix(),
            far_ip: far(&c1, 2),
        },
    ];
    let mut after_cfg = cfg.clone();
    for m in &mutations {
        after_cfg.apply(m).map_err(|e| format!("{m:?}: {e}"))?;
    }
    let after = build_topology(&after_cfg).map_err(|e| e.to_string())?;
    let records = diff_cases(&catalog, &SimLookingGlass::new(&after)).map_err(|e| e.to_string())?;
    let summary = ChangeSummary::from_records(&records);

    let on_removed = catalog.cases().filter(|c| c.near_br().name() == removed).count();
    let want = BTreeMap::from([
        (ChangeOutcome::ExactlySame, 25 - on_removed - 6),
        (ChangeOutcome::IncreasedLinks, 1),
        (ChangeOutcome::SameCountDifferentLinks, 1),
        (ChangeOutcome::RouterNotExisting, on_removed),
        (ChangeOutcome::NoRoutes, 1),
        (ChangeOutcome::NoMultipathFlag, 1),
        (ChangeOutcome::NoEbgpFlag, 1),
        (ChangeOutcome::OtherChange, 1),
    ]);
    ensure!(summary.counts == want, "counts {:?}, expected {want:?}", summary.counts);
    let per_case = [
        (&c0, ChangeOutcome::IncreasedLinks),
        (&c5, ChangeOutcome::SameCountDifferentLinks),
        (&c10, ChangeOutcome::NoRoutes),
        (&c3, ChangeOutcome::NoMultipathFlag),
        (&c8, ChangeOutcome::NoEbgpFlag),
        (&c1, ChangeOutcome::OtherChange),
    ];
    for (c, o) in per_case {
        let got = records.iter().find(|r| r.case == *c).map(|r| r.outcome);
        ensure!(got == Some(o), "{c}: {got:?}, expected {o:?}");
    }
    let counts: Vec<String> = summary.counts.iter().map(|(o, n)| format!("{}={n}", o.label())).collect();
    Ok(counts.join(", "))
}

fn c11_comparator() -> Outcome {
    let mut runner = deterministic(10_000);
    runner
        .run(&route_pair(), |(a, b)| {
            prop_assert_eq!(compare_routes(&a, &b).unwrap(), oracle_compare(&a, &b));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let p = Prefix::new("20.0.7.0".parse().unwrap(), 24).unwrap();
    let mut runner = deterministic(2_000);
    runner
        .run(&(prop::collection::vec(route(p), 1..8), 1usize..5), |(routes, max_paths)| {
            let g = select_multipath(&routes, max_paths).unwrap();
            for m in g.members() {
                prop_assert!(oracle_first_six_equal(m, g.best()));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("10000 pairs agree with the oracle; multipath members tie on six attributes in 2000 groups".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("closed-loop recovery", c1_closed_loop),
        ("stopping-rule economy", c2_stopping_rule),
        ("census arithmetic", c3_census),
        ("universal allocation", c4_universal),
        ("include-ports allocation", c5_include_ports),
        ("delay recovery", c6_delay),
        ("path validation", c7_validation),
        ("parser round trip", c8_parsers),
        ("farside taxonomy", c9_farside),
        ("diff taxonomy", c10_diff),
        ("best-path comparator", c11_comparator),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
