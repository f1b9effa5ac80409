use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::RouterId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    NorthAmerica,
    Europe,
    Asia,
    Other,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::NorthAmerica => "North America",
            Region::Europe => "Europe",
            Region::Asia => "Asia",
            Region::Other => "Other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Known {
        site: String,
        country: &'static str,
        region: Region,
    },
    /// The name is conforming but the site code is not in the table.
    UnlistedSite(String),
    Unknown,
}

impl Location {
    pub fn region(&self) -> Option<Region> {
        match self {
            Location::Known { region, .. } => Some(*region),
            _ => None,
        }
    }
}

// site code, country, region
const SITES: &[(&str, &str, Region)] = &[
    ("tor", "Canada", Region::NorthAmerica),
    ("mtl", "Canada", Region::NorthAmerica),
    ("yvr", "Canada", Region::NorthAmerica),
    ("cal", "Canada", Region::NorthAmerica),
    ("nyc", "United States", Region::NorthAmerica),
    ("lax", "United States", Region::NorthAmerica),
    ("sjc", "United States", Region::NorthAmerica),
    ("fmt", "United States", Region::NorthAmerica),
    ("pao", "United States", Region::NorthAmerica),
    ("chi", "United States", Region::NorthAmerica),
    ("ash", "United States", Region::NorthAmerica),
    ("sea", "United States", Region::NorthAmerica),
    ("dal", "United States", Region::NorthAmerica),
    ("mia", "United States", Region::NorthAmerica),
    ("atl", "United States", Region::NorthAmerica),
    ("den", "United States", Region::NorthAmerica),
    ("phx", "United States", Region::NorthAmerica),
    ("kcm", "United States", Region::NorthAmerica),
    ("par", "France", Region::Europe),
    ("mrs", "France", Region::Europe),
    ("fra", "Germany", Region::Europe),
    ("ber", "Germany", Region::Europe),
    ("lon", "United Kingdom", Region::Europe),
    ("man", "United Kingdom", Region::Europe),
    ("ams", "Netherlands", Region::Europe),
    ("sto", "Sweden", Region::Europe),
    ("zrh", "Switzerland", Region::Europe),
    ("mil", "Italy", Region::Europe),
    ("mad", "Spain", Region::Europe),
    ("waw", "Poland", Region::Europe),
    ("vie", "Austria", Region::Europe),
    ("prg", "Czech Republic", Region::Europe),
    ("hkg", "Hong Kong", Region::Asia),
    ("tyo", "Japan", Region::Asia),
    ("sin", "Singapore", Region::Asia),
    ("tpe", "Taiwan", Region::Asia),
    ("syd", "Australia", Region::Other),
    ("akl", "New Zealand", Region::Other),
    ("jnb", "South Africa", Region::Other),
    ("sao", "Brazil", Region::Other),
    ("mex", "Mexico", Region::NorthAmerica),
];

/// Extracts the site code from a `coreN.<code>N.domain` name.
pub fn site_code(name: &str) -> Option<String> {
    let mut labels = name.split('.');
    let first = labels.next()?;
    let second = labels.next()?;
    labels.next()?;
    let role_ok = first
        .trim_end_matches(|c: char| c.is_ascii_digit())
        .chars()
        .all(|c| c.is_ascii_alphabetic())
        && first.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
    let code = second.trim_end_matches(|c: char| c.is_ascii_digit());
    let numbered = code.len() < second.len();
    (role_ok && numbered && !code.is_empty() && code.chars().all(|c| c.is_ascii_alphabetic()))
        .then(|| code.to_ascii_lowercase())
}

pub fn router_location(router: &RouterId) -> Location {
    let Some(code) = site_code(router.name()) else {
        return Location::Unknown;
    };
    match SITES.iter().find(|(c, _, _)| *c == code) {
        Some((_, country, region)) => Location::Known {
            site: code,
            country,
            region: *region,
        },
        None => Location::UnlistedSite(code),
    }
}
