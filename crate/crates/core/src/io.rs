//! Plain-text formats shared by the pipeline stages.

use std::collections::BTreeMap;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Asn, BgpmCase, IxpDirectory, IxpEntry, Prefix, RouterId};
use crate::sim::TraceRecord;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{what} line {line}: {message}")]
    Line { what: &'static str, line: usize, message: String },
}

fn line_err(what: &'static str, line: usize, e: impl ToString) -> IoError {
    IoError::Line {
        what,
        line,
        message: e.to_string(),
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn write_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
}

#[derive(Serialize, Deserialize)]
struct DnsRow {
    ip: IpAddr,
    name: String,
}

/// `ip,name` rows.
pub fn read_dns(text: &str) -> Result<BTreeMap<IpAddr, String>, IoError> {
    let mut out = BTreeMap::new();
    for (i, row) in reader(text).deserialize::<DnsRow>().enumerate() {
        let row = row.map_err(|e| line_err("dns", i + 2, e))?;
        out.insert(row.ip, row.name);
    }
    Ok(out)
}

pub fn write_dns(names: &BTreeMap<IpAddr, String>) -> String {
    write_rows(names.iter().map(|(ip, name)| DnsRow { ip: *ip, name: name.clone() }))
}

#[derive(Serialize, Deserialize)]
struct IxpRow {
    name: String,
    prefix: Prefix,
}

/// `name,prefix` rows; an IXP with several prefixes has several rows.
pub fn read_ixp_directory(text: &str) -> Result<IxpDirectory, IoError> {
    let mut by_name: BTreeMap<String, Vec<Prefix>> = BTreeMap::new();
    for (i, row) in reader(text).deserialize::<IxpRow>().enumerate() {
        let row = row.map_err(|e| line_err("ixp", i + 2, e))?;
        by_name.entry(row.name).or_default().push(row.prefix);
    }
    let entries = by_name
        .into_iter()
        .map(|(name, prefixes)| IxpEntry { name, prefixes })
        .collect();
    IxpDirectory::new(entries).map_err(|e| line_err("ixp", 0, e))
}

pub fn write_ixp_directory(dir: &IxpDirectory) -> String {
    write_rows(dir.entries().iter().flat_map(|e| {
        e.prefixes.iter().map(|p| IxpRow {
            name: e.name.clone(),
            prefix: *p,
        })
    }))
}

#[derive(Serialize, Deserialize)]
struct PrefixRow {
    asn: u32,
    prefix: Prefix,
}

/// `asn,prefix` rows: prefixes originated by each neighbor, in file order.
pub fn read_neighbor_prefixes(text: &str) -> Result<BTreeMap<Asn, Vec<Prefix>>, IoError> {
    let mut out: BTreeMap<Asn, Vec<Prefix>> = BTreeMap::new();
    for (i, row) in reader(text).deserialize::<PrefixRow>().enumerate() {
        let row = row.map_err(|e| line_err("prefixes", i + 2, e))?;
        let asn = Asn::new(row.asn).map_err(|e| line_err("prefixes", i + 2, e))?;
        out.entry(asn).or_default().push(row.prefix);
    }
    Ok(out)
}

pub fn write_neighbor_prefixes(prefixes: &BTreeMap<Asn, Vec<Prefix>>) -> String {
    write_rows(
        prefixes
            .iter()
            .flat_map(|(asn, ps)| ps.iter().map(|p| PrefixRow { asn: asn.get(), prefix: *p })),
    )
}

#[derive(Serialize, Deserialize)]
struct CaseRow {
    near_as: u32,
    near_br: String,
    far_as: u32,
    dst_prefix: Prefix,
    /// far IPs separated by spaces
    far_ips: String,
    pattern: String,
}

/// Ground-truth case list: one row per planted case with its farside
/// pattern name.
pub fn write_cases<'a>(cases: impl IntoIterator<Item = (&'a BgpmCase, String)>) -> String {
    write_rows(cases.into_iter().map(|(c, pattern)| CaseRow {
        near_as: c.near_as().get(),
        near_br: c.near_br().name().to_string(),
        far_as: c.far_as().get(),
        dst_prefix: c.dst_prefix(),
        far_ips: c.far_ips().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
        pattern,
    }))
}

pub fn read_cases(text: &str) -> Result<Vec<(BgpmCase, String)>, IoError> {
    reader(text)
        .deserialize::<CaseRow>()
        .enumerate()
        .map(|(i, row)| {
            let line = i + 2;
            let row = row.map_err(|e| line_err("cases", line, e))?;
            let near_as = Asn::new(row.near_as).map_err(|e| line_err("cases", line, e))?;
            let far_as = Asn::new(row.far_as).map_err(|e| line_err("cases", line, e))?;
            let ips = row
                .far_ips
                .split_whitespace()
                .map(|s| s.parse::<IpAddr>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| line_err("cases", line, e))?;
            let router = RouterId::new(row.near_br, near_as).map_err(|e| line_err("cases", line, e))?;
            let case = BgpmCase::new(near_as, router, far_as, row.dst_prefix, ips)
                .map_err(|e| line_err("cases", line, e))?;
            Ok((case, row.pattern))
        })
        .collect()
}

/// One JSON trace per line; blank lines are ignored.
pub fn read_traces(text: &str) -> Result<Vec<TraceRecord>, IoError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| line_err("traces", i + 1, e)))
        .collect()
}
