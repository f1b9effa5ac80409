use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use bgpm_core::inference::{
    aggregate_stats, execute_plan_from, plan_queries, region_breakdown, summarize_catalog, CaseCatalog, CensusRow,
    DeploymentStats, ExecOptions, RateLimit, ResumeCursor,
};
use bgpm_core::io::{read_ixp_directory, read_neighbor_prefixes};
use bgpm_core::lg::{parse_summary, FixtureCorpus, LookingGlass};
use bgpm_core::model::{Asn, IxpDirectory, RouterId};

use crate::out::{read, warn, write_atomic};
use crate::{InferArgs, ReportArgs};

fn stats_text(catalog: &CaseCatalog, census: Option<&Path>) -> Result<String> {
    let stats: Vec<DeploymentStats> = match census {
        Some(p) => {
            let rows = CensusRow::read_csv(&read(p)?).map_err(anyhow::Error::msg)?;
            match aggregate_stats(catalog, &rows) {
                Ok(s) => s,
                Err(e) => {
                    warn(format!("{e}; ratios omitted"));
                    summarize_catalog(catalog)
                }
            }
        }
        None => {
            if !catalog.is_empty() {
                warn("no census given; ratios omitted");
            }
            summarize_catalog(catalog)
        }
    };
    let mut text = format!("cases\t{}\n", catalog.len());
    for s in &stats {
        text.push('\n');
        text.push_str(&s.render());
    }
    Ok(text)
}

pub fn run(a: &InferArgs, out: &Path) -> Result<()> {
    let corpus = FixtureCorpus::load_dir(&a.lg).with_context(|| format!("loading {}", a.lg.display()))?;
    let prefixes = read_neighbor_prefixes(&read(&a.prefixes)?)?;
    let dir = match &a.ixp {
        Some(p) => read_ixp_directory(&read(p)?)?,
        None => IxpDirectory::default(),
    };

    let names = corpus.routers();
    let mut summaries = BTreeMap::new();
    for name in &names {
        // a router without a captured summary is planned against every neighbor
        if let Ok(text) = corpus.summary(name) {
            match parse_summary(&text) {
                Ok(s) => {
                    summaries.insert(name.clone(), s);
                }
                Err(e) => warn(format!("{name}: unreadable summary: {e}")),
            }
        }
    }

    let mut catalog = CaseCatalog::new();
    let mut cursor: Option<ResumeCursor> = None;
    let cursor_path = out.join("cursor.json");
    let catalog_path = out.join("catalog.jsonl");
    if a.resume {
        if cursor_path.exists() {
            cursor = Some(serde_json::from_str(&read(&cursor_path)?).context("reading cursor")?);
        }
        if catalog_path.exists() {
            catalog = CaseCatalog::from_jsonl(&read(&catalog_path)?)?;
        }
    }

    let near_as = match a.near_as {
        Some(n) => Some(Asn::new(n)?),
        None => summaries.values().next().map(|s| s.local_as),
    };
    let mut error = None;
    let mut queries = Vec::new();
    if !names.is_empty() {
        let Some(near_as) = near_as else {
            bail!("cannot tell the near AS from the corpus; pass --near-as");
        };
        let routers = names
            .iter()
            .map(|n| RouterId::new(n.clone(), near_as))
            .collect::<Result<Vec<_>, _>>()?;
        let mut plan = plan_queries(near_as, &routers, &prefixes, Some(&summaries))?;
        plan.budget = a.budget;
        plan.rate_limit = a.rate_limit_ms.map(|ms| RateLimit {
            queries: 1,
            interval: Duration::from_millis(ms),
        });
        let opts = ExecOptions {
            exhaustive: a.exhaustive,
            discovered_at: a.timestamp,
        };
        let res = execute_plan_from(&plan, &corpus, &dir, &opts, cursor, catalog);
        catalog = res.catalog;
        queries = res.queries;
        cursor = res.cursor;
        error = res.error;
    } else {
        cursor = None;
    }

    write_atomic(&catalog_path, &catalog.to_jsonl())?;
    let qlog: String = queries
        .iter()
        .map(|q| serde_json::to_string(q).expect("query serializes") + "\n")
        .collect();
    write_atomic(&out.join("queries.jsonl"), &qlog)?;
    match cursor {
        Some(c) => {
            write_atomic(&cursor_path, &serde_json::to_string(&c)?)?;
            warn(format!("stopped early; resume with --resume (cursor in {})", cursor_path.display()));
        }
        None if cursor_path.exists() => fs::remove_file(&cursor_path)?,
        None => {}
    }
    let stats = stats_text(&catalog, a.census.as_deref())?;
    write_atomic(&out.join("stats.txt"), &stats)?;
    print!("{stats}");
    println!("queries\t{}", queries.len());
    if let Some(e) = error {
        bail!("LG failure, partial catalog written: {e}");
    }
    Ok(())
}

pub fn report(a: &ReportArgs, out: &Path) -> Result<()> {
    let catalog = CaseCatalog::from_jsonl(&read(&a.catalog)?)?;
    let mut text = stats_text(&catalog, a.census.as_deref())?;
    if let Some(lg) = &a.lg {
        let corpus = FixtureCorpus::load_dir(lg)?;
        let owner = catalog.cases().next().map(|c| c.near_as()).unwrap_or(Asn::new(1)?);
        let routers = corpus
            .routers()
            .into_iter()
            .map(|n| RouterId::new(n, owner))
            .collect::<Result<Vec<_>, _>>()?;
        text.push_str("\nregion\trouters\twith BGP-M\n");
        for (region, (total, with)) in region_breakdown(&routers, &catalog) {
            let label = region.map_or("Unknown".to_string(), |r| r.to_string());
            text.push_str(&format!("{label}\t{total}\t{with}\n"));
        }
    }
    write_atomic(&out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}
