use std::collections::BTreeMap;
use std::net::IpAddr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::plan::QueryPlan;
use super::{classify_connectivity, Connectivity, InferenceError};
use crate::lg::{detect_multipath, parse_routes_response, LookingGlass, RoutesResponse};
use crate::model::{Asn, BgpmCase, CaseKey, IxpDirectory, Prefix, RouterId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub case: BgpmCase,
    pub link_count: usize,
    pub connectivity: Connectivity,
    pub discovered_at: u64,
}

/// Cataloged cases, unique by their 4-tuple, in discovery order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CaseCatalog {
    entries: Vec<CatalogEntry>,
    index: BTreeMap<CaseKey, usize>,
}

#[derive(Serialize, Deserialize)]
struct CatalogLine {
    near_as: Asn,
    near_br: String,
    far_as: Asn,
    dst_prefix: Prefix,
    far_ips: Vec<IpAddr>,
    link_count: usize,
    connectivity: Connectivity,
    discovered_at: u64,
}

impl CaseCatalog {
    pub fn new() -> CaseCatalog {
        CaseCatalog::default()
    }

    /// Adds the entry unless its 4-tuple is already present.
    pub fn insert(&mut self, entry: CatalogEntry) -> bool {
        let key = entry.case.key();
        if self.index.contains_key(&key) {
            return false;
        }
        self.index.insert(key, self.entries.len());
        self.entries.push(entry);
        true
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &CaseKey) -> Option<&CatalogEntry> {
        self.index.get(key).map(|i| &self.entries[*i])
    }

    pub fn cases(&self) -> impl Iterator<Item = &BgpmCase> {
        self.entries.iter().map(|e| &e.case)
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = CatalogLine {
                near_as: e.case.near_as(),
                near_br: e.case.near_br().name().to_string(),
                far_as: e.case.far_as(),
                dst_prefix: e.case.dst_prefix(),
                far_ips: e.case.far_ips().iter().copied().collect(),
                link_count: e.link_count,
                connectivity: e.connectivity,
                discovered_at: e.discovered_at,
            };
            out.push_str(&serde_json::to_string(&line).expect("catalog serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<CaseCatalog, InferenceError> {
        let mut catalog = CaseCatalog::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let err = |message: String| InferenceError::CatalogLine {
                line: i + 1,
                message,
            };
            let line: CatalogLine = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
            let router = RouterId::new(line.near_br, line.near_as)?;
            let case = BgpmCase::new(line.near_as, router, line.far_as, line.dst_prefix, line.far_ips)
                .map_err(|e| err(e.to_string()))?;
            catalog.insert(CatalogEntry {
                link_count: case.link_count(),
                case,
                connectivity: line.connectivity,
                discovered_at: line.discovered_at,
            });
        }
        Ok(catalog)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryOutcome {
    Evidence,
    NoEvidence,
    NoRoutes,
    NotExisting,
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub router: String,
    pub neighbor: Asn,
    pub target: IpAddr,
    pub outcome: QueryOutcome,
}

/// Position of the next query to issue: router, neighbor and target index
/// within the plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResumeCursor {
    pub router: usize,
    pub neighbor: usize,
    pub target: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    /// Keep querying a neighbor's prefixes after the first evidence.
    pub exhaustive: bool,
    /// Timestamp recorded on newly cataloged cases.
    pub discovered_at: u64,
}

#[derive(Debug, Clone)]
pub struct ExecutionResult {
    pub catalog: CaseCatalog,
    pub queries: Vec<QueryRecord>,
    /// Set when execution stopped early (budget or transport failure).
    pub cursor: Option<ResumeCursor>,
    pub error: Option<String>,
}

impl ExecutionResult {
    /// Queries spent on one (router, neighbor) pair.
    pub fn queries_for(&self, router: &str, neighbor: Asn) -> usize {
        self.queries
            .iter()
            .filter(|q| q.router == router && q.neighbor == neighbor)
            .count()
    }
}

pub fn execute_plan<L: LookingGlass>(
    plan: &QueryPlan,
    lg: &L,
    dir: &IxpDirectory,
    opts: &ExecOptions,
) -> ExecutionResult {
    execute_plan_from(plan, lg, dir, opts, None, CaseCatalog::new())
}

/// Runs the plan router by router, neighbor by neighbor. The first evidence
/// for a (router, neighbor) pair ends that neighbor unless `exhaustive` is
/// set. Starts at `cursor` when resuming and extends `catalog`.
pub fn execute_plan_from<L: LookingGlass>(
    plan: &QueryPlan,
    lg: &L,
    dir: &IxpDirectory,
    opts: &ExecOptions,
    cursor: Option<ResumeCursor>,
    mut catalog: CaseCatalog,
) -> ExecutionResult {
    let start = cursor.unwrap_or(ResumeCursor {
        router: 0,
        neighbor: 0,
        target: 0,
    });
    let mut queries = Vec::new();
    let mut last_query: Option<Instant> = None;
    let stop = |catalog, queries, at: ResumeCursor, error: Option<String>| ExecutionResult {
        catalog,
        queries,
        cursor: Some(at),
        error,
    };

    for (ri, rp) in plan.routers.iter().enumerate().skip(start.router) {
        let router = rp.router.name();
        'neighbors: for (ni, np) in rp.neighbors.iter().enumerate() {
            if ri == start.router && ni < start.neighbor {
                continue;
            }
            for (ti, target) in np.targets.iter().enumerate() {
                if ri == start.router && ni == start.neighbor && ti < start.target {
                    continue;
                }
                let here = ResumeCursor {
                    router: ri,
                    neighbor: ni,
                    target: ti,
                };
                if plan.budget.is_some_and(|b| queries.len() >= b) {
                    return stop(catalog, queries, here, None);
                }
                if let (Some(limit), Some(prev)) = (plan.rate_limit, last_query) {
                    let wait = limit.spacing().saturating_sub(prev.elapsed());
                    if !wait.is_zero() {
                        std::thread::sleep(wait);
                    }
                }
                last_query = Some(Instant::now());
                let text = match lg.routes(router, *target) {
                    Ok(t) => t,
                    Err(e) => return stop(catalog, queries, here, Some(e.to_string())),
                };
                let outcome = match parse_routes_response(&text) {
                    Err(_) => QueryOutcome::Unparseable,
                    Ok(RoutesResponse::NotExisting) => QueryOutcome::NotExisting,
                    Ok(RoutesResponse::NoRoutes) => QueryOutcome::NoRoutes,
                    Ok(RoutesResponse::Routes(routes)) => match detect_multipath(&routes) {
                        None => QueryOutcome::NoEvidence,
                        Some(ev) => {
                            match BgpmCase::new(
                                plan.near_as,
                                rp.router.clone(),
                                ev.far_as,
                                ev.dst_prefix,
                                ev.next_hops,
                            ) {
                                Ok(case) => {
                                    catalog.insert(CatalogEntry {
                                        link_count: case.link_count(),
                                        connectivity: classify_connectivity(&case, dir),
                                        case,
                                        discovered_at: opts.discovered_at,
                                    });
                                    QueryOutcome::Evidence
                                }
                                Err(_) => QueryOutcome::NoEvidence,
                            }
                        }
                    },
                };
                queries.push(QueryRecord {
                    router: router.to_string(),
                    neighbor: np.neighbor_as,
                    target: *target,
                    outcome,
                });
                match outcome {
                    QueryOutcome::NotExisting => break 'neighbors,
                    QueryOutcome::Evidence if !opts.exhaustive => continue 'neighbors,
                    _ => {}
                }
            }
        }
    }
    ExecutionResult {
        catalog,
        queries,
        cursor: None,
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::plan::{plan_queries, RateLimit};
    use crate::lg::{FixtureCorpus, LgFixture};
    use std::time::Duration;

    const ROUTES: &str = "\
Number of BGP Routes matching display condition : 2
1       Prefix: 142.46.150.0/24,  Status: BME,  Age: 25d11h47m
         NEXT_HOP: 198.32.181.46, Metric: 0,  Learned from Peer: 198.32.181.46 (19752)
          LOCAL_PREF: 100,  MED: 0,  ORIGIN: igp,  Weight: 0
          AS_PATH: 19752
2       Prefix: 142.46.150.0/24,  Status: ME,  Age: 25d11h47m
         NEXT_HOP: 206.108.34.48, Metric: 0,  Learned from Peer: 206.108.34.48 (19752)
          LOCAL_PREF: 100,  MED: 0,  ORIGIN: igp,  Weight: 0
          AS_PATH: 19752
";

    fn setup() -> (QueryPlan, FixtureCorpus) {
        let he = Asn::new(6939).unwrap();
        let r = RouterId::new("core1.tor1.he.net", he).unwrap();
        let prefixes = BTreeMap::from([(
            Asn::new(19752).unwrap(),
            vec![
                "142.46.149.0/24".parse().unwrap(),
                "142.46.150.0/24".parse().unwrap(),
                "142.46.151.0/24".parse().unwrap(),
            ],
        )]);
        let plan = plan_queries(he, &[r], &prefixes, None).unwrap();
        let fx = |arg: &str, body: &str| LgFixture {
            router: "core1.tor1.he.net".into(),
            command: "routes".into(),
            arg: arg.into(),
            body: body.into(),
        };
        let corpus = FixtureCorpus::new([
            fx("142.46.149.1", "No routes\n"),
            fx("142.46.150.1", ROUTES),
            fx("142.46.151.1", ROUTES),
        ]);
        (plan, corpus)
    }

    #[test]
    fn stops_at_first_evidence() {
        let (plan, corpus) = setup();
        let res = execute_plan(&plan, &corpus, &IxpDirectory::default(), &ExecOptions::default());
        assert_eq!(res.catalog.len(), 1);
        assert_eq!(res.queries.len(), 2);
        assert_eq!(res.catalog.entries()[0].case.to_string(), "<AS6939, tor1, AS19752, 142.46.150.0/24>");
        assert!(res.cursor.is_none());

        let all = execute_plan(
            &plan,
            &corpus,
            &IxpDirectory::default(),
            &ExecOptions {
                exhaustive: true,
                ..ExecOptions::default()
            },
        );
        assert_eq!(all.queries.len(), 3);
        assert_eq!(all.catalog.len(), 1);
    }

    #[test]
    fn budget_yields_a_resume_cursor() {
        let (mut plan, corpus) = setup();
        plan.budget = Some(1);
        let dir = IxpDirectory::default();
        let first = execute_plan(&plan, &corpus, &dir, &ExecOptions::default());
        assert!(first.catalog.is_empty());
        let cursor = first.cursor.unwrap();
        assert_eq!(cursor.target, 1);
        plan.budget = None;
        let rest = execute_plan_from(&plan, &corpus, &dir, &ExecOptions::default(), Some(cursor), first.catalog);
        assert_eq!(rest.catalog.len(), 1);
        assert_eq!(rest.queries.len(), 1);
    }

    #[test]
    fn missing_response_is_a_partial_result() {
        let (plan, _) = setup();
        let empty_router = FixtureCorpus::new([LgFixture {
            router: "core1.tor1.he.net".into(),
            command: "summary".into(),
            arg: "-".into(),
            body: String::new(),
        }]);
        let res = execute_plan(&plan, &empty_router, &IxpDirectory::default(), &ExecOptions::default());
        assert!(res.error.is_some());
        assert_eq!(res.cursor, Some(ResumeCursor { router: 0, neighbor: 0, target: 0 }));
    }

    #[test]
    fn rate_limit_spaces_queries() {
        let (mut plan, corpus) = setup();
        plan.rate_limit = Some(RateLimit {
            queries: 1,
            interval: Duration::from_millis(30),
        });
        let t = Instant::now();
        let res = execute_plan(&plan, &corpus, &IxpDirectory::default(), &ExecOptions::default());
        assert_eq!(res.queries.len(), 2);
        assert!(t.elapsed() >= Duration::from_millis(30));
    }

    #[test]
    fn jsonl_round_trip() {
        let (plan, corpus) = setup();
        let res = execute_plan(&plan, &corpus, &IxpDirectory::default(), &ExecOptions::default());
        let text = res.catalog.to_jsonl();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(CaseCatalog::from_jsonl(&text).unwrap(), res.catalog);
        assert!(matches!(
            CaseCatalog::from_jsonl("{oops"),
            Err(InferenceError::CatalogLine { line: 1, .. })
        ));
    }
}
