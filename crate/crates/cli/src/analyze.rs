use std::collections::BTreeMap;
use std::net::IpAddr;
use std::path::Path;

use anyhow::{Context, Result};
use bgpm_core::analysis::plot::{histogram_svg, strip_map_svg, time_series_svg};
use bgpm_core::analysis::{
    build_routing_map, classify_allocation, classify_faras, coverage_check, delay_histogram, delay_stats,
    validate_path, DelaySeries, GroupBy, GroupKey, Rejection, RoutingMap, ValidatedPath,
};
use bgpm_core::ecmp::Protocol;
use bgpm_core::inference::CaseCatalog;
use bgpm_core::io::{read_dns, read_traces};
use bgpm_core::model::{enumerate_probe_targets, BgpmCase};
use bgpm_core::sim::TraceRecord;
use rayon::prelude::*;

use crate::out::{read, warn, write_atomic};
use crate::AnalyzeArgs;

struct CaseOutput {
    dir: String,
    rows: Vec<String>,
    coverage: Vec<String>,
    files: Vec<(String, String)>,
    skipped: bool,
    rejections: BTreeMap<Rejection, usize>,
}

fn case_dir(case: &BgpmCase) -> String {
    format!(
        "{}_AS{}_{}",
        case.near_br().short_name(),
        case.far_as().get(),
        case.dst_prefix().to_string().replace(['/', ':'], "_")
    )
}

fn tag(src: &IpAddr, proto: Protocol) -> String {
    format!("{}_{}", src.to_string().replace(':', "_"), proto)
}

fn stats_csv(series: &DelaySeries, by: GroupBy) -> String {
    let mut out = String::from("far_ip,group,median_ms,p25_ms,p75_ms,count\n");
    for ((far, key), s) in delay_stats(series, by) {
        let k = match key {
            GroupKey::Time(t) => t.to_string(),
            GroupKey::Dst(d) => d.to_string(),
        };
        out.push_str(&format!(
            "{far},{k},{:.6},{:.6},{:.6},{}\n",
            s.median, s.p25, s.p75, s.count
        ));
    }
    out
}

type Series = BTreeMap<(IpAddr, Protocol), (Vec<RoutingMap>, Vec<ValidatedPath>)>;

fn analyze_case(case: &BgpmCase, traces: &[&TraceRecord], dns: &BTreeMap<IpAddr, String>, a: &AnalyzeArgs) -> CaseOutput {
    let label = case.to_string();
    let mut groups: BTreeMap<(IpAddr, Protocol, u64), Vec<ValidatedPath>> = BTreeMap::new();
    let mut rejections: BTreeMap<Rejection, usize> = BTreeMap::new();
    for t in traces {
        let paths = groups.entry((t.probe.src, t.probe.protocol, t.probe.time)).or_default();
        match validate_path(t, case, dns) {
            Ok(v) => paths.push(v),
            Err(r) => *rejections.entry(r).or_default() += 1,
        }
    }

    let mut coverage = Vec::new();
    let mut series: Series = BTreeMap::new();
    let mut all_maps = 0usize;
    let mut totals: BTreeMap<(IpAddr, Protocol), usize> = BTreeMap::new();
    for ((src, proto, time), paths) in groups {
        *totals.entry((src, proto)).or_default() += 1;
        all_maps += 1;
        let map = match build_routing_map(case, time, &paths) {
            Ok(m) => m,
            Err(e) => {
                warn(format!("{label}: {e}"));
                continue;
            }
        };
        let report = coverage_check(&map);
        coverage.push(format!("{label},{src},{proto},{time},{},{}", report.reachable, report.pass));
        if report.pass {
            let slot = series.entry((src, proto)).or_default();
            slot.0.push(map);
            slot.1.extend(paths);
        }
    }
    let skipped = series.is_empty();
    let mut out = CaseOutput {
        dir: case_dir(case),
        rows: Vec::new(),
        coverage,
        files: Vec::new(),
        skipped,
        rejections,
    };
    if skipped {
        out.rows.push(format!("{label},,,{all_maps},0,skipped,,0,,0"));
        return out;
    }

    let faras = classify_faras(&series.values().flat_map(|(m, _)| m.iter().cloned()).collect::<Vec<_>>());
    let targets = enumerate_probe_targets(&case.dst_prefix()).unwrap_or_default();
    for ((src, proto), (maps, paths)) in &series {
        let other = series
            .iter()
            .find(|((s, p), _)| s != src && p == proto)
            .map(|(_, (m, _))| m.as_slice());
        let allocation = classify_allocation(maps, other);
        let (delays, _) = DelaySeries::from_paths(paths);
        let mut values = delays.values();
        values.sort_by(f64::total_cmp);
        let median = if values.is_empty() {
            String::new()
        } else {
            format!("{:.3}", bgpm_core::analysis::percentile(&values, 0.5))
        };
        out.rows.push(format!(
            "{label},{src},{proto},{},{},{allocation},{faras},{},{median},{}",
            totals[&(*src, *proto)],
            maps.len(),
            values.len(),
            delays.clamped
        ));

        let t = tag(src, *proto);
        let mut map_csv = String::from("time,dst_ip,link_index,far_ip\n");
        for m in maps {
            for (dst, idx) in &m.assignment {
                let far = case.far_ip_at(*idx).expect("index within case");
                map_csv.push_str(&format!("{},{dst},{idx},{far}\n", m.time));
            }
        }
        out.files.push((format!("maps_{t}.csv"), map_csv));
        out.files.push((format!("delays_{t}.csv"), delays.to_csv()));
        out.files.push((format!("delay_by_time_{t}.csv"), stats_csv(&delays, GroupBy::Time)));
        out.files.push((format!("delay_by_dst_{t}.csv"), stats_csv(&delays, GroupBy::Dst)));

        if !a.no_plots {
            let rows: Vec<(String, String)> = maps
                .iter()
                .take(96)
                .map(|m| (m.time.to_string(), m.strip(&targets)))
                .collect();
            out.files.push((format!("maps_{t}.svg"), strip_map_svg(&format!("{label} {src} {proto}"), &rows)));
            let by_time = delay_stats(&delays, GroupBy::Time);
            let mut lines = Vec::new();
            for far in case.far_ips() {
                let vals: Vec<f64> = delays.for_link(far).iter().map(|s| s.delay_ms).collect();
                out.files.push((
                    format!("delay_hist_{t}_{}.svg", far.to_string().replace(':', "_")),
                    histogram_svg(&format!("{label} link {far}"), &delay_histogram(&vals, a.bin_ms, a.max_ms), a.bin_ms),
                ));
                let pts: Vec<_> = by_time
                    .iter()
                    .filter(|((f, _), _)| f == far)
                    .filter_map(|((_, k), s)| match k {
                        GroupKey::Time(t) => Some((*t, *s)),
                        GroupKey::Dst(_) => None,
                    })
                    .collect();
                lines.push((far.to_string(), pts));
            }
            out.files.push((format!("delay_series_{t}.svg"), time_series_svg(&label, &lines)));
        }
    }
    out
}

pub fn run(a: &AnalyzeArgs, out: &Path) -> Result<()> {
    let catalog = CaseCatalog::from_jsonl(&read(&a.catalog)?)?;
    let traces = read_traces(&read(&a.traces)?)?;
    let dns = read_dns(&read(&a.dns)?)?;

    let cases: Vec<&BgpmCase> = catalog.cases().collect();
    let mut per_case: Vec<Vec<&TraceRecord>> = vec![Vec::new(); cases.len()];
    for t in &traces {
        for (i, c) in cases.iter().enumerate() {
            if c.dst_prefix().contains(&t.probe.dst) {
                per_case[i].push(t);
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .context("thread pool")?;
    let outputs: Vec<CaseOutput> = pool.install(|| {
        cases
            .par_iter()
            .zip(per_case.par_iter())
            .map(|(c, ts)| analyze_case(c, ts, &dns, a))
            .collect()
    });

    let mut summary = String::from(
        "case,src,protocol,maps,maps_covered,allocation,faras,delay_samples,delay_median_ms,clamped\n",
    );
    let mut coverage = String::from("case,src,protocol,time,reachable,pass\n");
    let mut rejected = String::from("case,reason,count\n");
    let mut skipped = 0;
    for (c, o) in cases.iter().zip(&outputs) {
        for r in &o.rows {
            summary.push_str(r);
            summary.push('\n');
        }
        for r in &o.coverage {
            coverage.push_str(r);
            coverage.push('\n');
        }
        for (reason, n) in &o.rejections {
            rejected.push_str(&format!("{c},{reason},{n}\n"));
        }
        if o.skipped {
            skipped += 1;
            warn(format!("{c}: no epoch reached the coverage threshold; skipped"));
        }
        for (name, body) in &o.files {
            write_atomic(&out.join(&o.dir).join(name), body)?;
        }
    }
    write_atomic(&out.join("analysis.csv"), &summary)?;
    write_atomic(&out.join("coverage.csv"), &coverage)?;
    write_atomic(&out.join("rejections.csv"), &rejected)?;
    print!("{summary}");
    println!("cases\t{}\tskipped\t{skipped}", cases.len());
    Ok(())
}
