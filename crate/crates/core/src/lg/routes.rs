use std::collections::BTreeSet;
use std::net::IpAddr;

use super::{parse_err, LgError, RouterView};
use crate::bgp::{ties_on_first_six, LearnedVia, Origin, RouteEntry, RouteFlags};
use crate::model::{Asn, Prefix};

pub const NO_ROUTES: &str = "No routes";
pub const NOT_EXISTING: &str = "Not existing";

const COUNT_PREFIX: &str = "Number of BGP Routes matching display condition : ";
const LEGEND: [&str; 3] = [
    "Status A:AGGREGATE B:BEST b:NOT-INSTALLED-BEST C:CONFED_EBGP D:DAMPED",
    "       E:EBGP H:HISTORY I:IBGP L:LABELED M:MULTIPATH m:NOT-INSTALLED-MULTIPATH",
    "       S:SUPPRESSED F:ROUTE-FILTERED",
];
// legend characters accepted but not interpreted
const OTHER_FLAGS: &str = "AbCDHmSF";

/// Renders a duration as `DdHHhMMm`, truncated to the minute.
pub fn format_age(seconds: u64) -> String {
    let minutes = seconds / 60;
    format!("{}d{:02}h{:02}m", minutes / 1440, (minutes / 60) % 24, minutes % 60)
}

/// Parses durations made of `<n>d`, `<n>h`, `<n>m` and `<n>s` parts.
pub fn parse_age(text: &str) -> Option<u64> {
    let mut total = 0u64;
    let mut digits = String::new();
    let mut any = false;
    for c in text.trim().chars() {
        if c.is_ascii_digit() {
            digits.push(c);
            continue;
        }
        let n: u64 = digits.parse().ok()?;
        digits.clear();
        total += n * match c {
            'd' => 86_400,
            'h' => 3_600,
            'm' => 60,
            's' => 1,
            _ => return None,
        };
        any = true;
    }
    (any && digits.is_empty()).then_some(total)
}

/// One path block of a `routes detail` response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRoute {
    pub entry: RouteEntry,
    /// Status characters exactly as listed.
    pub raw_flags: String,
    /// AS shown next to the peer address.
    pub peer_as: Asn,
}

impl ParsedRoute {
    pub fn from_entry(entry: &RouteEntry, local_as: Asn) -> ParsedRoute {
        ParsedRoute {
            raw_flags: status_string(entry),
            peer_as: entry.neighbor_as().unwrap_or(local_as),
            entry: entry.clone(),
        }
    }

    pub fn has(&self, c: char) -> bool {
        self.raw_flags.contains(c)
    }

    pub fn last_update_age(&self) -> u64 {
        self.entry.age_seconds
    }
}

fn status_string(e: &RouteEntry) -> String {
    let mut s = String::new();
    if e.flags.contains(RouteFlags::BEST) {
        s.push('B');
    }
    if e.flags.contains(RouteFlags::MULTIPATH) {
        s.push('M');
    }
    if e.flags.contains(RouteFlags::EBGP) {
        s.push('E');
    }
    if e.learned_via == LearnedVia::Ibgp {
        s.push('I');
    }
    if e.flags.contains(RouteFlags::LABELED) {
        s.push('L');
    }
    s
}

/// The three possible answers to a `routes` query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoutesResponse {
    NotExisting,
    NoRoutes,
    Routes(Vec<ParsedRoute>),
}

pub fn render_routes_response(resp: &RoutesResponse) -> String {
    match resp {
        RoutesResponse::NotExisting => format!("{NOT_EXISTING}\n"),
        RoutesResponse::NoRoutes => format!("{NO_ROUTES}\n"),
        RoutesResponse::Routes(routes) if routes.is_empty() => format!("{NO_ROUTES}\n"),
        RoutesResponse::Routes(routes) => render_blocks(routes),
    }
}

fn render_blocks(routes: &[ParsedRoute]) -> String {
    let mut out = format!("{COUNT_PREFIX}{}\n", routes.len());
    for l in LEGEND {
        out.push_str(l);
        out.push('\n');
    }
    for (i, r) in routes.iter().enumerate() {
        let e = &r.entry;
        out.push_str(&format!(
            "{:<8}Prefix: {},  Status: {},  Age: {}\n",
            i + 1,
            e.dst_prefix,
            r.raw_flags,
            format_age(e.age_seconds)
        ));
        out.push_str(&format!(
            "         NEXT_HOP: {}, Metric: {},  Learned from Peer: {} ({})\n",
            e.next_hop,
            e.igp_metric,
            e.peer_router_id,
            r.peer_as.get()
        ));
        out.push_str(&format!(
            "          LOCAL_PREF: {},  MED: {},  ORIGIN: {},  Weight: 0\n",
            e.local_pref, e.med, e.origin
        ));
        let path: Vec<String> = e.as_path.iter().map(|a| a.get().to_string()).collect();
        out.push_str(&format!("          AS_PATH: {}\n", path.join(" ")));
    }
    out
}

/// `show ip bgp routes detail <dst>` against a router view: the installed
/// paths of the longest matching prefix.
pub fn render_routes_detail(view: &RouterView<'_>, dst: &IpAddr) -> String {
    match view.table.lookup(dst) {
        None => render_routes_response(&RoutesResponse::NoRoutes),
        Some(group) => render_blocks(
            &group
                .members()
                .iter()
                .map(|e| ParsedRoute::from_entry(e, view.local_as))
                .collect::<Vec<_>>(),
        ),
    }
}

fn fields(line: &str) -> Vec<(&str, &str)> {
    line.split(',')
        .filter_map(|part| {
            let part = part.trim();
            part.split_once(": ")
                .or_else(|| part.strip_suffix(':').map(|k| (k, "")))
                .map(|(k, v)| (k.trim(), v.trim()))
        })
        .collect()
}

fn field<'a>(fs: &[(&'a str, &'a str)], key: &str, line: usize) -> Result<&'a str, LgError> {
    fs.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| parse_err(line, format!("missing `{key}`")))
}

fn num<T: std::str::FromStr>(v: &str, key: &str, line: usize) -> Result<T, LgError> {
    v.parse().map_err(|_| parse_err(line, format!("bad {key} `{v}`")))
}

struct Block {
    start: usize,
    prefix: Option<Prefix>,
    raw_flags: String,
    age: u64,
    next_hop: Option<IpAddr>,
    igp_metric: u32,
    peer: Option<(IpAddr, Asn)>,
    local_pref: u32,
    med: u32,
    origin: Origin,
    as_path: Vec<Asn>,
}

impl Block {
    fn finish(self, ordinal: usize) -> Result<ParsedRoute, LgError> {
        let next_hop = self.next_hop.ok_or(LgError::MissingNextHop(ordinal))?;
        let prefix = self.prefix.ok_or_else(|| parse_err(self.start, "missing prefix"))?;
        let (peer_router_id, peer_as) = self
            .peer
            .ok_or_else(|| parse_err(self.start, "missing peer"))?;
        let mut flags = RouteFlags::empty();
        for c in self.raw_flags.chars() {
            match c {
                'B' => flags |= RouteFlags::BEST,
                'M' => flags |= RouteFlags::MULTIPATH,
                'E' => flags |= RouteFlags::EBGP,
                'L' => flags |= RouteFlags::LABELED,
                'I' => {}
                c if OTHER_FLAGS.contains(c) => {}
                c => return Err(LgError::UnknownFlag(c)),
            }
        }
        Ok(ParsedRoute {
            entry: RouteEntry {
                dst_prefix: prefix,
                next_hop,
                local_pref: self.local_pref,
                as_path: self.as_path,
                origin: self.origin,
                med: self.med,
                learned_via: if self.raw_flags.contains('I') {
                    LearnedVia::Ibgp
                } else {
                    LearnedVia::Ebgp
                },
                igp_metric: self.igp_metric,
                peer_router_id,
                age_seconds: self.age,
                flags,
            },
            raw_flags: self.raw_flags,
            peer_as,
        })
    }
}

/// Parses a `routes detail` response into its path blocks. `No routes`
/// yields an empty list; `Not existing` is reported as an error.
pub fn parse_routes_detail(text: &str) -> Result<Vec<ParsedRoute>, LgError> {
    match parse_routes_response(text)? {
        RoutesResponse::NotExisting => Err(LgError::NotExisting),
        RoutesResponse::NoRoutes => Ok(Vec::new()),
        RoutesResponse::Routes(r) => Ok(r),
    }
}

pub fn parse_routes_response(text: &str) -> Result<RoutesResponse, LgError> {
    let body: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    match body.first() {
        None => return Ok(RoutesResponse::NoRoutes),
        Some((_, l)) if l.eq_ignore_ascii_case(NOT_EXISTING) => return Ok(RoutesResponse::NotExisting),
        Some((_, l)) if l.eq_ignore_ascii_case(NO_ROUTES) => return Ok(RoutesResponse::NoRoutes),
        _ => {}
    }

    let mut declared: Option<usize> = None;
    let mut blocks: Vec<Block> = Vec::new();
    for (n, line) in body {
        if let Some(count) = line.strip_prefix(COUNT_PREFIX.trim_end()) {
            declared = Some(num(count.trim(), "route count", n)?);
            continue;
        }
        if line.starts_with("Status ") || LEGEND.iter().any(|l| l.trim() == line) {
            continue;
        }
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        if head.chars().all(|c| c.is_ascii_digit()) && rest.trim_start().starts_with("Prefix:") {
            let fs = fields(rest);
            blocks.push(Block {
                start: n,
                prefix: Some(num(field(&fs, "Prefix", n)?, "prefix", n)?),
                raw_flags: field(&fs, "Status", n)?.to_string(),
                age: parse_age(field(&fs, "Age", n)?).ok_or_else(|| parse_err(n, "bad age"))?,
                next_hop: None,
                igp_metric: 0,
                peer: None,
                local_pref: 100,
                med: 0,
                origin: Origin::Igp,
                as_path: Vec::new(),
            });
            continue;
        }
        let block = blocks
            .last_mut()
            .ok_or_else(|| parse_err(n, "attribute line before the first path block"))?;
        if line.starts_with("NEXT_HOP:") {
            let fs = fields(line);
            block.next_hop = Some(num(field(&fs, "NEXT_HOP", n)?, "next hop", n)?);
            block.igp_metric = num(field(&fs, "Metric", n)?, "metric", n)?;
            let peer = field(&fs, "Learned from Peer", n)?;
            let (addr, asn) = peer
                .split_once('(')
                .ok_or_else(|| parse_err(n, "peer AS missing"))?;
            block.peer = Some((
                num(addr.trim(), "peer address", n)?,
                num(asn.trim_end_matches(')').trim(), "peer AS", n)?,
            ));
        } else if line.starts_with("LOCAL_PREF:") {
            let fs = fields(line);
            block.local_pref = num(field(&fs, "LOCAL_PREF", n)?, "local preference", n)?;
            block.med = num(field(&fs, "MED", n)?, "MED", n)?;
            block.origin = num(field(&fs, "ORIGIN", n)?, "origin", n)?;
        } else if let Some(path) = line.strip_prefix("AS_PATH:") {
            block.as_path = path
                .split_whitespace()
                .map(|a| num(a, "AS path element", n))
                .collect::<Result<_, _>>()?;
        } else {
            return Err(parse_err(n, format!("unrecognized line `{line}`")));
        }
    }

    let routes = blocks
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.finish(i + 1))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(d) = declared {
        if d != routes.len() {
            return Err(parse_err(1, format!("declared {d} routes, found {}", routes.len())));
        }
    }
    Ok(if routes.is_empty() {
        RoutesResponse::NoRoutes
    } else {
        RoutesResponse::Routes(routes)
    })
}

/// Multipath evidence for one destination prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BgpmEvidence {
    pub dst_prefix: Prefix,
    pub far_as: Asn,
    pub next_hops: BTreeSet<IpAddr>,
    pub attributes_equal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultipathAssessment {
    /// Paths flagged both M and E.
    pub candidates: usize,
    pub attributes_equal: bool,
    pub evidence: Option<BgpmEvidence>,
}

/// Looks for at least two paths flagged M and E, with distinct next hops and
/// the same local preference, AS path, origin, MED, learned-via and IGP
/// metric. The AS path must match element for element, not just in length.
pub fn assess_multipath(routes: &[ParsedRoute]) -> MultipathAssessment {
    let cands: Vec<&ParsedRoute> = routes.iter().filter(|r| r.has('M') && r.has('E')).collect();
    let attributes_equal = cands.windows(2).all(|w| {
        ties_on_first_six(&w[0].entry, &w[1].entry)
            && w[0].entry.as_path == w[1].entry.as_path
            && w[0].entry.dst_prefix == w[1].entry.dst_prefix
    });
    let next_hops: BTreeSet<IpAddr> = cands.iter().map(|r| r.entry.next_hop).collect();
    let evidence = match cands.first() {
        Some(first) if attributes_equal && next_hops.len() >= 2 => {
            first.entry.neighbor_as().map(|far_as| BgpmEvidence {
                dst_prefix: first.entry.dst_prefix,
                far_as,
                next_hops: next_hops.clone(),
                attributes_equal,
            })
        }
        _ => None,
    };
    MultipathAssessment {
        candidates: cands.len(),
        attributes_equal: attributes_equal && cands.len() >= 2,
        evidence,
    }
}

pub fn detect_multipath(routes: &[ParsedRoute]) -> Option<BgpmEvidence> {
    assess_multipath(routes).evidence
}
