use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::delay::DelayParams;
use super::SimError;
use crate::ecmp::EcmpAlgorithm;
use crate::model::{Asn, IxpEntry, Prefix};

fn default_intra_hops() -> usize {
    2
}

fn default_true() -> bool {
    true
}

fn default_max_paths() -> usize {
    4
}

fn default_algorithm() -> EcmpAlgorithm {
    EcmpAlgorithm::IncludePorts
}

/// Simulator input, normally read from TOML:
///
/// ```toml
/// seed = 7
/// [[router]]
/// name = "core1.hkg1.he.net"
/// asn = 6939
/// router_id = "72.52.92.1"
/// ingress_ips = ["184.105.64.129"]
///
/// [[link]]
/// near_router = "core1.hkg1.he.net"
/// far_asn = 20940
/// far_ip = "103.247.139.17"
///
/// [[announce]]
/// asn = 20940
/// prefixes = ["23.67.36.0/24"]
///
/// [[case]]
/// router = "core1.hkg1.he.net"
/// prefix = "23.67.36.0/24"
/// pattern = "parallel"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub seed: u64,
    /// Hops inside the near AS between a source and the NearIP.
    #[serde(default = "default_intra_hops")]
    pub intra_hops: usize,
    #[serde(default)]
    pub delay: DelayParams,
    #[serde(default, rename = "as", skip_serializing_if = "Vec::is_empty")]
    pub ases: Vec<AsConfig>,
    #[serde(default, rename = "router")]
    pub routers: Vec<RouterConfig>,
    #[serde(default, rename = "link")]
    pub links: Vec<LinkConfig>,
    #[serde(default, rename = "announce")]
    pub announcements: Vec<AnnounceConfig>,
    #[serde(default, rename = "ixp", skip_serializing_if = "Vec::is_empty")]
    pub ixps: Vec<IxpEntry>,
    #[serde(default, rename = "case")]
    pub cases: Vec<CaseConfig>,
    #[serde(default, rename = "source")]
    pub sources: Vec<SourceConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AsRole {
    Transit,
    Stub,
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsConfig {
    pub asn: Asn,
    pub role: AsRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterConfig {
    pub name: String,
    pub asn: Asn,
    pub router_id: IpAddr,
    /// Addresses the router answers traceroute probes from. Sources pick one
    /// by index; one is allocated when the list is empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ingress_ips: Vec<IpAddr>,
    #[serde(default = "default_true")]
    pub ecmp: bool,
    #[serde(default = "default_max_paths")]
    pub max_paths: usize,
    #[serde(default = "default_algorithm")]
    pub algorithm: EcmpAlgorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salt: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub near_router: String,
    pub far_asn: Asn,
    pub far_ip: IpAddr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_router: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near_ip: Option<IpAddr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_gbps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnounceConfig {
    pub asn: Asn,
    pub prefixes: Vec<Prefix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Split,
    Parallel,
    Merge,
    Complex,
    Unresponsive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub router: String,
    pub prefix: Prefix,
    /// Links to balance over; empty means every link to the announcing AS.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub far_ips: Vec<IpAddr>,
    #[serde(default = "default_pattern")]
    pub pattern: PatternKind,
    /// Marks the case routes as iBGP-learned.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ibgp: bool,
    /// The `.1` destination never answers.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unreachable_first: bool,
}

fn default_pattern() -> PatternKind {
    PatternKind::Parallel
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub ip: IpAddr,
    /// Border router this source's traffic leaves the near AS through.
    pub exit_router: String,
    #[serde(default)]
    pub ingress_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intra_hops: Option<usize>,
}

impl TopologyConfig {
    pub fn from_toml_str(text: &str) -> Result<TopologyConfig, SimError> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn router(&self, name: &str) -> Option<&RouterConfig> {
        self.routers.iter().find(|r| r.name == name)
    }

    /// Applies one change between two measurement epochs.
    pub fn apply(&mut self, mutation: &Mutation) -> Result<(), SimError> {
        match mutation {
            Mutation::RemoveRouter { router } => {
                if self.router(router).is_none() {
                    return Err(SimError::UnknownRouter(router.clone()));
                }
                self.routers.retain(|r| &r.name != router);
                self.links.retain(|l| &l.near_router != router);
                self.cases.retain(|c| &c.router != router);
                self.sources.retain(|s| &s.exit_router != router);
            }
            Mutation::WithdrawPrefix { prefix } => {
                for a in &mut self.announcements {
                    a.prefixes.retain(|p| p != prefix);
                }
                self.cases.retain(|c| &c.prefix != prefix);
            }
            Mutation::RemoveCase { router, prefix } => {
                let i = self.case_index(router, prefix)?;
                self.cases.remove(i);
            }
            Mutation::CaseViaIbgp { router, prefix } => {
                let i = self.case_index(router, prefix)?;
                self.cases[i].ibgp = true;
            }
            Mutation::AddLink {
                router,
                prefix,
                far_ip,
            } => {
                let i = self.case_index(router, prefix)?;
                let far_asn = self.announcer(prefix)?;
                self.pin_case_links(i)?;
                self.links.push(LinkConfig {
                    near_router: router.clone(),
                    far_asn,
                    far_ip: *far_ip,
                    far_router: None,
                    near_ip: None,
                    bandwidth_gbps: None,
                });
                self.cases[i].far_ips.push(*far_ip);
            }
            Mutation::ReplaceLink {
                router,
                prefix,
                old,
                new,
            } => {
                let i = self.case_index(router, prefix)?;
                self.pin_case_links(i)?;
                let link = self
                    .links
                    .iter_mut()
                    .find(|l| &l.near_router == router && l.far_ip == *old)
                    .ok_or(SimError::UnknownLinkIp(*old))?;
                link.far_ip = *new;
                link.near_ip = None;
                for ip in &mut self.cases[i].far_ips {
                    if ip == old {
                        *ip = *new;
                    }
                }
            }
            Mutation::DropLink {
                router,
                prefix,
                far_ip,
            } => {
                let i = self.case_index(router, prefix)?;
                self.pin_case_links(i)?;
                self.cases[i].far_ips.retain(|ip| ip != far_ip);
            }
        }
        Ok(())
    }

    fn case_index(&self, router: &str, prefix: &Prefix) -> Result<usize, SimError> {
        self.cases
            .iter()
            .position(|c| c.router == router && &c.prefix == prefix)
            .ok_or_else(|| SimError::UnknownCase(router.to_string(), *prefix))
    }

    fn announcer(&self, prefix: &Prefix) -> Result<Asn, SimError> {
        self.announcements
            .iter()
            .find(|a| a.prefixes.contains(prefix))
            .map(|a| a.asn)
            .ok_or(SimError::Unannounced(*prefix))
    }

    // Makes an implicit "all links" case explicit so link edits stay local.
    fn pin_case_links(&mut self, i: usize) -> Result<(), SimError> {
        if self.cases[i].far_ips.is_empty() {
            let asn = self.announcer(&self.cases[i].prefix)?;
            let router = self.cases[i].router.clone();
            self.cases[i].far_ips = self
                .links
                .iter()
                .filter(|l| l.near_router == router && l.far_asn == asn)
                .map(|l| l.far_ip)
                .collect();
        }
        Ok(())
    }
}

/// Topology edits used to produce a later epoch for revisit experiments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mutation {
    RemoveRouter { router: String },
    WithdrawPrefix { prefix: Prefix },
    RemoveCase { router: String, prefix: Prefix },
    CaseViaIbgp { router: String, prefix: Prefix },
    AddLink { router: String, prefix: Prefix, far_ip: IpAddr },
    ReplaceLink { router: String, prefix: Prefix, old: IpAddr, new: IpAddr },
    DropLink { router: String, prefix: Prefix, far_ip: IpAddr },
}
