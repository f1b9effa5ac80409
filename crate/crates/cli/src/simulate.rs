use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bgpm_core::ecmp::{EcmpAlgorithm, Protocol};
use bgpm_core::inference::CensusRow;
use bgpm_core::io::{write_cases, write_dns, write_ixp_directory, write_neighbor_prefixes};
use bgpm_core::lg::{parse_age, render_fixture, FixtureCorpus, LgFixture, LookingGlass};
use bgpm_core::model::{Asn, Family, Prefix};
use bgpm_core::sim::{
    build_topology, generate_scenario, measurement_ticks, run_campaign, DelayModel, Mutation, ScenarioSpec,
    SimLookingGlass, Topology, TopologyConfig, DEFAULT_START,
};
use serde::Deserialize;

use crate::out::{read, write_atomic};
use crate::SimulateArgs;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MutationFile {
    #[serde(default)]
    mutation: Vec<Mutation>,
}

pub fn parse_interval(text: &str) -> Result<u64> {
    let secs = match text.trim().parse::<u64>() {
        Ok(s) => s,
        Err(_) => parse_age(text).with_context(|| format!("bad interval `{text}`"))?,
    };
    if secs == 0 {
        bail!("interval must be positive");
    }
    Ok(secs)
}

fn parse_protocols(list: &[String]) -> Result<Vec<Protocol>> {
    list.iter()
        .map(|p| match p.trim().to_ascii_lowercase().as_str() {
            "icmp" => Ok(Protocol::Icmp),
            "udp" => Ok(Protocol::Udp),
            "tcp" => Ok(Protocol::Tcp),
            other => bail!("unknown protocol `{other}`"),
        })
        .collect()
}

/// The configuration to simulate and the announcements it had before any
/// mutation was applied.
fn load_config(a: &SimulateArgs) -> Result<(TopologyConfig, Vec<Prefix>)> {
    let mut cfg = match &a.topology {
        Some(p) => TopologyConfig::from_toml_str(&read(p)?).with_context(|| format!("{}", p.display()))?,
        None => generate_scenario(&ScenarioSpec {
            seed: a.seed.unwrap_or(1),
            routers: a.routers,
            cases: a.cases,
            prefixes_per_neighbor: a.prefixes_per_neighbor,
            algorithm: EcmpAlgorithm::IncludePorts,
        }),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let before: Vec<Prefix> = cfg.announcements.iter().flat_map(|x| x.prefixes.iter().copied()).collect();
    if let Some(p) = &a.mutations {
        let file: MutationFile = toml::from_str(&read(p)?).with_context(|| format!("{}", p.display()))?;
        for m in &file.mutation {
            cfg.apply(m).with_context(|| format!("applying {m:?}"))?;
        }
    }
    Ok((cfg, before))
}

/// Every response `infer` and `diff` can ask for: one summary per router
/// and one `routes` answer per announced probe-size prefix. `extra` adds
/// prefixes no longer announced, so a revisit sees them answered.
pub fn lg_corpus(topo: &Topology, extra: &[Prefix]) -> Result<Vec<LgFixture>> {
    let lg = SimLookingGlass::new(topo);
    let targets: BTreeSet<_> = topo
        .announcements
        .values()
        .flatten()
        .chain(extra)
        .filter(|p| p.is_probe_size())
        .map(|p| p.query_target())
        .collect();
    let mut out = Vec::new();
    for r in topo.router_ids() {
        out.push(LgFixture {
            router: r.name().to_string(),
            command: "summary".into(),
            arg: "-".into(),
            body: lg.summary(r.name())?,
        });
        for t in &targets {
            out.push(LgFixture {
                router: r.name().to_string(),
                command: "routes".into(),
                arg: t.to_string(),
                body: lg.routes(r.name(), *t)?,
            });
        }
    }
    Ok(out)
}

fn census(topo: &Topology) -> Vec<CensusRow> {
    let mut rows = Vec::new();
    let owners: BTreeSet<Asn> = topo.routers.iter().map(|r| r.id.owner()).collect();
    for near in owners {
        let routers = topo.routers.iter().filter(|r| r.id.owner() == near).count();
        for family in [Family::V4, Family::V6] {
            let neighbors: BTreeSet<Asn> = topo
                .links
                .iter()
                .filter(|l| l.near_router.owner() == near && Family::of(&l.far_ip) == family)
                .map(|l| l.far_router.owner())
                .collect();
            if !neighbors.is_empty() {
                rows.push(CensusRow {
                    near_as: near,
                    family,
                    neighbors_total: neighbors.len(),
                    routers_total: routers,
                });
            }
        }
    }
    rows
}

pub fn run(a: &SimulateArgs, out: &Path) -> Result<()> {
    let (cfg, before) = load_config(a)?;
    let topo = build_topology(&cfg).context("building topology")?;
    let interval = parse_interval(&a.interval)?;
    let protocols = parse_protocols(&a.protocols)?;
    let ticks = measurement_ticks(DEFAULT_START, a.days, interval);

    write_atomic(&out.join("topology.toml"), &cfg.to_toml_string())?;

    let lg_dir = out.join("lg");
    if lg_dir.exists() {
        for e in fs::read_dir(&lg_dir)? {
            let p = e?.path();
            if p.extension().is_some_and(|x| x == "lg") {
                fs::remove_file(&p)?;
            }
        }
    }
    let fixtures = lg_corpus(&topo, &before)?;
    for f in &fixtures {
        write_atomic(&lg_dir.join(FixtureCorpus::file_name(f)), &render_fixture(f))?;
    }

    write_atomic(&out.join("prefixes.csv"), &write_neighbor_prefixes(&topo.announcements))?;
    write_atomic(&out.join("ixp.csv"), &write_ixp_directory(&topo.ixp_membership))?;
    write_atomic(&out.join("dns.csv"), &write_dns(&topo.dns()))?;
    write_atomic(&out.join("census.csv"), &CensusRow::write_csv(&census(&topo)))?;
    let truth: Vec<_> = topo
        .planted
        .iter()
        .map(|p| (&p.case, format!("{:?}", p.pattern.kind).to_lowercase()))
        .collect();
    write_atomic(&out.join("truth.csv"), &write_cases(truth))?;

    let mut n_traces = 0usize;
    if !a.no_traces {
        let delays = DelayModel::new(topo.delay, topo.seed)?;
        let mut text = String::new();
        let mut by_router: BTreeMap<usize, Vec<_>> = BTreeMap::new();
        for s in &topo.sources {
            by_router.entry(s.exit_router).or_default().push(s.ip);
        }
        for p in &topo.planted {
            let idx = topo.router_index(p.case.near_br().name()).expect("planted router exists");
            for src in by_router.get(&idx).into_iter().flatten() {
                for proto in &protocols {
                    for t in &ticks {
                        for tr in run_campaign(&topo, *src, &p.case.dst_prefix(), *proto, *t, &delays)? {
                            text.push_str(&tr.record.to_json_line());
                            text.push('\n');
                            n_traces += 1;
                        }
                    }
                }
            }
        }
        write_atomic(&out.join("traces.jsonl"), &text)?;
    }

    println!(
        "simulated {} routers, {} planted cases, {} measurement ticks, {} LG responses, {} traces -> {}",
        topo.routers.len(),
        topo.planted.len(),
        ticks.len(),
        fixtures.len(),
        n_traces,
        out.display()
    );
    Ok(())
}
