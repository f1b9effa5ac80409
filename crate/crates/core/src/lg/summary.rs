use std::net::IpAddr;

use super::routes::{format_age, parse_age};
use super::{parse_err, LgError, RouterView};
use crate::model::Asn;

/// One row of the `summary` table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryRow {
    pub neighbor_ip: IpAddr,
    pub neighbor_as: Asn,
    pub state: String,
    pub uptime_seconds: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryTable {
    pub router_id: IpAddr,
    pub local_as: Asn,
    pub rows: Vec<SummaryRow>,
}

const IDENT_PREFIX: &str = "BGP router identifier ";
const LOCAL_AS: &str = ", local AS number ";

fn row_line(ip: &str, v: &str, asn: &str, uptime: &str, state: &str) -> String {
    format!("{ip:<39} {v} {asn:>11} {uptime:>10} {state}")
}

impl SummaryTable {
    pub fn from_view(view: &RouterView<'_>) -> SummaryTable {
        SummaryTable {
            router_id: view.router_id,
            local_as: view.local_as,
            rows: view
                .sessions
                .iter()
                .map(|s| SummaryRow {
                    neighbor_ip: s.neighbor_ip,
                    neighbor_as: s.neighbor_as,
                    state: s.state.clone(),
                    uptime_seconds: s.uptime_seconds,
                })
                .collect(),
        }
    }

    /// Column layout: address left-aligned in 39 characters (a full IPv6
    /// address), BGP version, AS number right-aligned in 11, uptime
    /// right-aligned in 10, then the session state.
    pub fn render(&self) -> String {
        let mut out = format!("{IDENT_PREFIX}{}{LOCAL_AS}{}\n", self.router_id, self.local_as.get());
        out.push_str(&row_line("Neighbor Address", "V", "AS#", "Uptime", "State"));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&row_line(
                &r.neighbor_ip.to_string(),
                "4",
                &r.neighbor_as.get().to_string(),
                &format_age(r.uptime_seconds),
                &r.state,
            ));
            out.push('\n');
        }
        out
    }

    /// Neighbor ASes with at least `min` sessions, in first-seen order.
    pub fn neighbors_with_sessions(&self, min: usize) -> Vec<Asn> {
        let mut order: Vec<Asn> = Vec::new();
        for r in &self.rows {
            if !order.contains(&r.neighbor_as) {
                order.push(r.neighbor_as);
            }
        }
        order
            .into_iter()
            .filter(|a| self.rows.iter().filter(|r| r.neighbor_as == *a).count() >= min)
            .collect()
    }
}

pub fn render_summary(view: &RouterView<'_>) -> String {
    SummaryTable::from_view(view).render()
}

/// Parses a `summary` response. Columns are split on whitespace, so spacing
/// variants are accepted.
pub fn parse_summary(text: &str) -> Result<SummaryTable, LgError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty());

    let (n, ident) = lines.next().ok_or_else(|| parse_err(1, "empty summary"))?;
    let rest = ident
        .trim_start()
        .strip_prefix(IDENT_PREFIX)
        .ok_or_else(|| parse_err(n, "expected `BGP router identifier`"))?;
    let (rid, asn) = rest
        .split_once(LOCAL_AS)
        .ok_or_else(|| parse_err(n, "expected local AS number"))?;
    let router_id = rid.trim().parse().map_err(|_| parse_err(n, "bad router identifier"))?;
    let local_as = asn.trim().parse().map_err(|_| parse_err(n, "bad local AS number"))?;

    let (n, header) = lines.next().ok_or_else(|| parse_err(n + 1, "missing column header"))?;
    if !header.trim_start().starts_with("Neighbor") {
        return Err(parse_err(n, "expected column header"));
    }

    let mut rows = Vec::new();
    for (n, line) in lines {
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 5 {
            return Err(parse_err(n, format!("expected 5 columns, found {}", cols.len())));
        }
        let neighbor_ip = cols[0]
            .parse()
            .map_err(|_| parse_err(n, format!("bad neighbor address `{}`", cols[0])))?;
        if cols[1].parse::<u8>().is_err() {
            return Err(parse_err(n, format!("bad BGP version `{}`", cols[1])));
        }
        let neighbor_as = cols[2]
            .parse()
            .map_err(|_| parse_err(n, format!("bad AS number `{}`", cols[2])))?;
        let uptime_seconds =
            parse_age(cols[3]).ok_or_else(|| parse_err(n, format!("bad uptime `{}`", cols[3])))?;
        rows.push(SummaryRow {
            neighbor_ip,
            neighbor_as,
            state: cols[4..].join(" "),
            uptime_seconds,
        });
    }
    Ok(SummaryTable {
        router_id,
        local_as,
        rows,
    })
}
