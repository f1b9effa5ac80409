use std::path::Path;

use anyhow::{Context, Result};
use bgpm_core::inference::{diff_cases, CaseCatalog, ChangeSummary};
use bgpm_core::lg::FixtureCorpus;

use crate::out::{read, write_atomic};
use crate::DiffArgs;

pub fn run(a: &DiffArgs, out: &Path) -> Result<()> {
    let old = CaseCatalog::from_jsonl(&read(&a.catalog)?)?;
    let corpus = FixtureCorpus::load_dir(&a.lg).with_context(|| format!("loading {}", a.lg.display()))?;
    let records = diff_cases(&old, &corpus)?;

    let mut csv = String::from("near_as,near_br,far_as,dst_prefix,outcome,new_far_ips\n");
    for r in &records {
        let new_ips = r
            .new_far_ips
            .as_ref()
            .map(|s| s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.case.near_as().get(),
            r.case.near_br().name(),
            r.case.far_as().get(),
            r.case.dst_prefix(),
            serde_json::to_value(r.outcome)?.as_str().unwrap_or_default(),
            new_ips
        ));
    }
    write_atomic(&out.join("changes.csv"), &csv)?;
    let summary = ChangeSummary::from_records(&records).render();
    write_atomic(&out.join("changes.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}
