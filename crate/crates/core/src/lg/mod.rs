//! Looking Glass responses: the `summary` session table and the
//! `routes detail` listing, both rendered and parsed, plus the sources that
//! answer queries (a simulated topology or a directory of captured
//! responses).

mod fixture;
mod routes;
mod summary;

use std::net::IpAddr;
use std::sync::atomic::{AtomicUsize, Ordering};

use thiserror::Error;

pub use fixture::{parse_fixture, render_fixture, FixtureCorpus, LgFixture};
pub use routes::{
    assess_multipath, detect_multipath, format_age, parse_age, parse_routes_detail,
    parse_routes_response, render_routes_detail, render_routes_response, BgpmEvidence,
    MultipathAssessment, ParsedRoute, RoutesResponse, NOT_EXISTING, NO_ROUTES,
};
pub use summary::{parse_summary, render_summary, SummaryRow, SummaryTable};

use crate::bgp::RoutingTable;
use crate::model::{Asn, RouterId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LgError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown status flag `{0}`")]
    UnknownFlag(char),
    #[error("route block {0} has no next hop")]
    MissingNextHop(usize),
    #[error("router reported as not existing")]
    NotExisting,
    #[error("no captured response for {router} {command} {arg}")]
    MissingResponse {
        router: String,
        command: String,
        arg: String,
    },
    #[error("query budget exhausted")]
    BudgetExhausted,
    #[error("{0}")]
    Io(String),
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> LgError {
    LgError::Parse {
        line,
        message: message.into(),
    }
}

/// One BGP session as listed by `summary`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub neighbor_ip: IpAddr,
    pub neighbor_as: Asn,
    pub uptime_seconds: u64,
    pub state: String,
}

/// What a Looking Glass exposes about one router.
#[derive(Debug, Clone, Copy)]
pub struct RouterView<'a> {
    pub name: &'a RouterId,
    pub router_id: IpAddr,
    pub local_as: Asn,
    pub sessions: &'a [Session],
    pub table: &'a RoutingTable,
}

/// Something that answers LG commands with raw response text. Unknown
/// routers are answered with the [`NOT_EXISTING`] text, not an error.
pub trait LookingGlass {
    fn summary(&self, router: &str) -> Result<String, LgError>;
    fn routes(&self, router: &str, target: IpAddr) -> Result<String, LgError>;
}

impl<T: LookingGlass + ?Sized> LookingGlass for &T {
    fn summary(&self, router: &str) -> Result<String, LgError> {
        (**self).summary(router)
    }

    fn routes(&self, router: &str, target: IpAddr) -> Result<String, LgError> {
        (**self).routes(router, target)
    }
}

/// Counts the queries passed to an inner source.
#[derive(Debug)]
pub struct CountingLookingGlass<L> {
    inner: L,
    summaries: AtomicUsize,
    routes: AtomicUsize,
}

impl<L: LookingGlass> CountingLookingGlass<L> {
    pub fn new(inner: L) -> Self {
        CountingLookingGlass {
            inner,
            summaries: AtomicUsize::new(0),
            routes: AtomicUsize::new(0),
        }
    }

    pub fn summary_queries(&self) -> usize {
        self.summaries.load(Ordering::Relaxed)
    }

    pub fn routes_queries(&self) -> usize {
        self.routes.load(Ordering::Relaxed)
    }
}

impl<L: LookingGlass> LookingGlass for CountingLookingGlass<L> {
    fn summary(&self, router: &str) -> Result<String, LgError> {
        self.summaries.fetch_add(1, Ordering::Relaxed);
        self.inner.summary(router)
    }

    fn routes(&self, router: &str, target: IpAddr) -> Result<String, LgError> {
        self.routes.fetch_add(1, Ordering::Relaxed);
        self.inner.routes(router, target)
    }
}
