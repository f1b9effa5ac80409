//! Address-family-aware value types shared by the whole pipeline: AS numbers,
//! prefixes, routers, border links, the BGP-M case tuple and the IXP
//! prefix directory.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("AS number must be positive")]
    ZeroAsn,
    #[error("invalid AS number `{0}`")]
    InvalidAsn(String),
    #[error("malformed prefix `{0}`")]
    MalformedPrefix(String),
    #[error("prefix length {len} out of range for {family}")]
    PrefixLength { len: u8, family: Family },
    #[error("unsupported probing prefix length /{0} (only /24 and /48)")]
    UnsupportedProbeLength(u8),
    #[error("router name must not be empty")]
    EmptyRouterName,
    #[error("border link endpoints {0} and {1} belong to different address families")]
    LinkFamilyMismatch(IpAddr, IpAddr),
    #[error("border link connects {0} to itself")]
    LinkSameOwner(Asn),
    #[error("case router {router} is owned by {owner}, not {near_as}")]
    CaseOwner { router: String, owner: Asn, near_as: Asn },
    #[error("a BGP-M case needs at least two far IPs, got {0}")]
    TooFewFarIps(usize),
    #[error("far IP {ip} does not match the family of {prefix}")]
    CaseFamilyMismatch { ip: IpAddr, prefix: Prefix },
    #[error("IXP `{name}` has overlapping prefixes {a} and {b}")]
    OverlappingIxpPrefixes { name: String, a: Prefix, b: Prefix },
}

/// IP address family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    V4,
    V6,
}

impl Family {
    pub fn of(ip: &IpAddr) -> Family {
        match ip {
            IpAddr::V4(_) => Family::V4,
            IpAddr::V6(_) => Family::V6,
        }
    }

    pub fn max_len(self) -> u8 {
        match self {
            Family::V4 => 32,
            Family::V6 => 128,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::V4 => "ipv4",
            Family::V6 => "ipv6",
        })
    }
}

impl FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ipv4" | "v4" | "4" => Ok(Family::V4),
            "ipv6" | "v6" | "6" => Ok(Family::V6),
            _ => Err(ModelError::MalformedPrefix(s.to_string())),
        }
    }
}

/// Autonomous system number. Zero is reserved and rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Asn(u32);

impl Asn {
    pub fn new(number: u32) -> Result<Asn, ModelError> {
        if number == 0 {
            Err(ModelError::ZeroAsn)
        } else {
            Ok(Asn(number))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Asn {
    type Error = ModelError;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Asn::new(value)
    }
}

impl From<Asn> for u32 {
    fn from(asn: Asn) -> u32 {
        asn.0
    }
}

impl fmt::Display for Asn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AS{}", self.0)
    }
}

impl FromStr for Asn {
    type Err = ModelError;

    /// Accepts both `6939` and `AS6939`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t
            .strip_prefix("AS")
            .or_else(|| t.strip_prefix("as"))
            .unwrap_or(t);
        let n: u32 = digits
            .parse()
            .map_err(|_| ModelError::InvalidAsn(s.to_string()))?;
        Asn::new(n)
    }
}

pub(crate) fn ip_to_bits(ip: &IpAddr) -> u128 {
    match ip {
        IpAddr::V4(a) => u32::from(*a) as u128,
        IpAddr::V6(a) => u128::from(*a),
    }
}

pub(crate) fn bits_to_ip(family: Family, bits: u128) -> IpAddr {
    match family {
        Family::V4 => IpAddr::V4(Ipv4Addr::from(bits as u32)),
        Family::V6 => IpAddr::V6(Ipv6Addr::from(bits)),
    }
}

fn netmask(family: Family, len: u8) -> u128 {
    let width = family.max_len() as u32;
    if len == 0 {
        return 0;
    }
    let full = if width == 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    };
    let host = width - len as u32;
    full & !((1u128 << host) - 1)
}

/// A network prefix. Host bits of the base address are always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Prefix {
    base: IpAddr,
    len: u8,
}

impl Prefix {
    /// Builds a prefix, masking any host bits of `addr` to zero.
    pub fn new(addr: IpAddr, len: u8) -> Result<Prefix, ModelError> {
        let family = Family::of(&addr);
        if len > family.max_len() {
            return Err(ModelError::PrefixLength { len, family });
        }
        let bits = ip_to_bits(&addr) & netmask(family, len);
        Ok(Prefix {
            base: bits_to_ip(family, bits),
            len,
        })
    }

    pub fn base(&self) -> IpAddr {
        self.base
    }

    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn family(&self) -> Family {
        Family::of(&self.base)
    }

    pub fn contains(&self, ip: &IpAddr) -> bool {
        Family::of(ip) == self.family()
            && ip_to_bits(ip) & netmask(self.family(), self.len) == ip_to_bits(&self.base)
    }

    pub fn overlaps(&self, other: &Prefix) -> bool {
        self.contains(&other.base) || other.contains(&self.base)
    }

    /// Address at `offset` from the base, e.g. `.1` for the first host.
    pub fn host(&self, offset: u128) -> IpAddr {
        bits_to_ip(self.family(), ip_to_bits(&self.base) + offset)
    }

    /// The single address queried for this prefix at a Looking Glass
    /// (`X.Y.Z.1` or `X:Y:Z::1`).
    pub fn query_target(&self) -> IpAddr {
        self.host(1)
    }

    /// True for the prefix sizes the probing campaign supports.
    pub fn is_probe_size(&self) -> bool {
        matches!(
            (self.family(), self.len),
            (Family::V4, 24) | (Family::V6, 48)
        )
    }
}

/// Parses `<addr>/<len>` into a canonical prefix.
pub fn parse_prefix(text: &str) -> Result<Prefix, ModelError> {
    let (addr, len) = text
        .trim()
        .split_once('/')
        .ok_or_else(|| ModelError::MalformedPrefix(text.to_string()))?;
    let addr: IpAddr = addr
        .parse()
        .map_err(|_| ModelError::MalformedPrefix(text.to_string()))?;
    let len: u8 = len
        .parse()
        .map_err(|_| ModelError::MalformedPrefix(text.to_string()))?;
    Prefix::new(addr, len)
}

impl FromStr for Prefix {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_prefix(s)
    }
}

impl TryFrom<String> for Prefix {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        parse_prefix(&value)
    }
}

impl From<Prefix> for String {
    fn from(p: Prefix) -> String {
        p.to_string()
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.base, self.len)
    }
}

/// The 254 destinations probed inside a /24 (`.1`–`.254`) or /48
/// (`::1`–`::fe`), ascending.
pub fn enumerate_probe_targets(prefix: &Prefix) -> Result<Vec<IpAddr>, ModelError> {
    if !prefix.is_probe_size() {
        return Err(ModelError::UnsupportedProbeLength(prefix.len()));
    }
    Ok((1..=254u128).map(|i| prefix.host(i)).collect())
}

/// A router, named as its operator names it (e.g. `core1.tor1.he.net`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRouterId")]
pub struct RouterId {
    name: String,
    owner: Asn,
}

#[derive(Deserialize)]
struct RawRouterId {
    name: String,
    owner: Asn,
}

impl TryFrom<RawRouterId> for RouterId {
    type Error = ModelError;

    fn try_from(raw: RawRouterId) -> Result<Self, Self::Error> {
        RouterId::new(raw.name, raw.owner)
    }
}

impl RouterId {
    pub fn new(name: impl Into<String>, owner: Asn) -> Result<RouterId, ModelError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(ModelError::EmptyRouterName);
        }
        Ok(RouterId { name, owner })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn owner(&self) -> Asn {
        self.owner
    }

    /// Site label used in case tuples: `tor1` for `core1.tor1.he.net`.
    /// Names without a dotted site component are returned whole.
    pub fn short_name(&self) -> &str {
        let labels: Vec<&str> = self.name.split('.').collect();
        if labels.len() >= 3 && !labels[1].is_empty() {
            labels[1]
        } else {
            &self.name
        }
    }
}

impl fmt::Display for RouterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// An inter-domain link, denoted by the ingress addresses on either side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorderLink {
    pub near_ip: IpAddr,
    pub far_ip: IpAddr,
    pub near_router: RouterId,
    pub far_router: RouterId,
    pub bandwidth_gbps: Option<f64>,
}

impl BorderLink {
    pub fn new(
        near_ip: IpAddr,
        far_ip: IpAddr,
        near_router: RouterId,
        far_router: RouterId,
        bandwidth_gbps: Option<f64>,
    ) -> Result<BorderLink, ModelError> {
        if Family::of(&near_ip) != Family::of(&far_ip) {
            return Err(ModelError::LinkFamilyMismatch(near_ip, far_ip));
        }
        if near_router.owner() == far_router.owner() {
            return Err(ModelError::LinkSameOwner(near_router.owner()));
        }
        Ok(BorderLink {
            near_ip,
            far_ip,
            near_router,
            far_router,
            bandwidth_gbps: bandwidth_gbps.filter(|b| *b > 0.0),
        })
    }
}

/// One BGP-M deployment: `<NearAS, NearBR, FarAS, DstPrfx>` together with
/// the far ends of the border links it balances over.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCase")]
pub struct BgpmCase {
    near_as: Asn,
    near_br: RouterId,
    far_as: Asn,
    dst_prefix: Prefix,
    far_ips: BTreeSet<IpAddr>,
}

#[derive(Deserialize)]
struct RawCase {
    near_as: Asn,
    near_br: RouterId,
    far_as: Asn,
    dst_prefix: Prefix,
    far_ips: BTreeSet<IpAddr>,
}

impl TryFrom<RawCase> for BgpmCase {
    type Error = ModelError;

    fn try_from(raw: RawCase) -> Result<Self, Self::Error> {
        BgpmCase::new(raw.near_as, raw.near_br, raw.far_as, raw.dst_prefix, raw.far_ips)
    }
}

impl BgpmCase {
    pub fn new(
        near_as: Asn,
        near_br: RouterId,
        far_as: Asn,
        dst_prefix: Prefix,
        far_ips: impl IntoIterator<Item = IpAddr>,
    ) -> Result<BgpmCase, ModelError> {
        let far_ips: BTreeSet<IpAddr> = far_ips.into_iter().collect();
        if near_br.owner() != near_as {
            return Err(ModelError::CaseOwner {
                router: near_br.name().to_string(),
                owner: near_br.owner(),
                near_as,
            });
        }
        if far_ips.len() < 2 {
            return Err(ModelError::TooFewFarIps(far_ips.len()));
        }
        if let Some(ip) = far_ips
            .iter()
            .find(|ip| Family::of(ip) != dst_prefix.family())
        {
            return Err(ModelError::CaseFamilyMismatch {
                ip: *ip,
                prefix: dst_prefix,
            });
        }
        Ok(BgpmCase {
            near_as,
            near_br,
            far_as,
            dst_prefix,
            far_ips,
        })
    }

    pub fn near_as(&self) -> Asn {
        self.near_as
    }

    pub fn near_br(&self) -> &RouterId {
        &self.near_br
    }

    pub fn far_as(&self) -> Asn {
        self.far_as
    }

    pub fn dst_prefix(&self) -> Prefix {
        self.dst_prefix
    }

    /// Far IPs in ascending order; the position is the link index.
    pub fn far_ips(&self) -> &BTreeSet<IpAddr> {
        &self.far_ips
    }

    pub fn link_count(&self) -> usize {
        self.far_ips.len()
    }

    pub fn link_index(&self, far_ip: &IpAddr) -> Option<usize> {
        self.far_ips.iter().position(|ip| ip == far_ip)
    }

    pub fn far_ip_at(&self, index: usize) -> Option<IpAddr> {
        self.far_ips.iter().nth(index).copied()
    }

    /// The identity of a case ignores its link set.
    pub fn key(&self) -> CaseKey {
        CaseKey {
            near_as: self.near_as,
            near_br: self.near_br.name().to_string(),
            far_as: self.far_as,
            dst_prefix: self.dst_prefix,
        }
    }
}

impl fmt::Display for BgpmCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{}, {}, {}, {}>",
            self.near_as,
            self.near_br.short_name(),
            self.far_as,
            self.dst_prefix
        )
    }
}

/// The 4-tuple identifying a case.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CaseKey {
    pub near_as: Asn,
    pub near_br: String,
    pub far_as: Asn,
    pub dst_prefix: Prefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IxpEntry {
    pub name: String,
    pub prefixes: Vec<Prefix>,
}

/// IXP names and their peering LAN prefixes.
#[derive(Debug, Clone, Default)]
pub struct IxpDirectory {
    entries: Vec<IxpEntry>,
    // (family, len) -> masked network bits -> entry index
    index: HashMap<(Family, u8), HashMap<u128, usize>>,
    lengths: Vec<(Family, u8)>,
}

impl IxpDirectory {
    pub fn new(entries: Vec<IxpEntry>) -> Result<IxpDirectory, ModelError> {
        for entry in &entries {
            for (i, a) in entry.prefixes.iter().enumerate() {
                for b in &entry.prefixes[i + 1..] {
                    if a.overlaps(b) {
                        return Err(ModelError::OverlappingIxpPrefixes {
                            name: entry.name.clone(),
                            a: *a,
                            b: *b,
                        });
                    }
                }
            }
        }
        let mut index: HashMap<(Family, u8), HashMap<u128, usize>> = HashMap::new();
        for (i, entry) in entries.iter().enumerate() {
            for p in &entry.prefixes {
                index
                    .entry((p.family(), p.len()))
                    .or_default()
                    .entry(ip_to_bits(&p.base()))
                    .or_insert(i);
            }
        }
        let mut lengths: Vec<(Family, u8)> = index.keys().copied().collect();
        lengths.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(IxpDirectory {
            entries,
            index,
            lengths,
        })
    }

    pub fn entries(&self) -> &[IxpEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Name of the IXP whose LAN contains `ip`, by longest match.
    pub fn lookup(&self, ip: &IpAddr) -> Option<&str> {
        let family = Family::of(ip);
        let bits = ip_to_bits(ip);
        self.lengths
            .iter()
            .filter(|(f, _)| *f == family)
            .find_map(|key| {
                let masked = bits & netmask(family, key.1);
                self.index[key].get(&masked)
            })
            .map(|&i| self.entries[i].name.as_str())
    }
}

/// Free-function form of [`IxpDirectory::lookup`].
pub fn ip_in_directory<'a>(ip: &IpAddr, dir: &'a IxpDirectory) -> Option<&'a str> {
    dir.lookup(ip)
}
