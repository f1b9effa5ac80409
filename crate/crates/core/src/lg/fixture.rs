use std::collections::BTreeMap;
use std::fs;
use std::net::IpAddr;
use std::path::Path;

use super::routes::NOT_EXISTING;
use super::{parse_err, LgError, LookingGlass};

const HEADER: &str = "# lg-fixture v1 ";

/// One captured LG response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LgFixture {
    pub router: String,
    /// `summary` or `routes`.
    pub command: String,
    /// Query argument; `-` for commands without one.
    pub arg: String,
    pub body: String,
}

pub fn render_fixture(f: &LgFixture) -> String {
    format!("{HEADER}{} {} {}\n{}", f.router, f.command, f.arg, f.body)
}

pub fn parse_fixture(text: &str) -> Result<LgFixture, LgError> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let rest = first
        .strip_prefix(HEADER)
        .ok_or_else(|| parse_err(1, "missing `# lg-fixture v1` header"))?;
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(parse_err(1, "header needs <router> <command> <arg>"));
    }
    Ok(LgFixture {
        router: parts[0].to_string(),
        command: parts[1].to_string(),
        arg: parts[2].to_string(),
        body: body.to_string(),
    })
}

fn site_key(router: &str) -> &str {
    let labels: Vec<&str> = router.split('.').collect();
    if labels.len() >= 3 && !labels[1].is_empty() {
        labels[1]
    } else {
        router
    }
}

/// A set of captured responses keyed by router, command and argument.
/// Routers are matched by full name or by site label.
#[derive(Debug, Clone, Default)]
pub struct FixtureCorpus {
    fixtures: BTreeMap<(String, String, String), LgFixture>,
}

impl FixtureCorpus {
    pub fn new(fixtures: impl IntoIterator<Item = LgFixture>) -> FixtureCorpus {
        let mut corpus = FixtureCorpus::default();
        for f in fixtures {
            corpus.insert(f);
        }
        corpus
    }

    pub fn insert(&mut self, f: LgFixture) {
        let key = (site_key(&f.router).to_string(), f.command.clone(), f.arg.clone());
        self.fixtures.insert(key, f);
    }

    /// Loads every `*.lg` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<FixtureCorpus, LgError> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| LgError::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "lg"))
            .collect();
        paths.sort();
        let mut corpus = FixtureCorpus::default();
        for p in paths {
            let text = fs::read_to_string(&p).map_err(|e| LgError::Io(format!("{}: {e}", p.display())))?;
            corpus.insert(parse_fixture(&text).map_err(|e| LgError::Io(format!("{}: {e}", p.display())))?);
        }
        Ok(corpus)
    }

    /// File name for a fixture, unique per (router, command, arg).
    pub fn file_name(f: &LgFixture) -> String {
        let arg: String = f
            .arg
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
            .collect();
        format!("{}__{}__{}.lg", f.router, f.command, arg)
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }

    pub fn fixtures(&self) -> impl Iterator<Item = &LgFixture> {
        self.fixtures.values()
    }

    /// Full router names present in the corpus, sorted.
    pub fn routers(&self) -> Vec<String> {
        let mut names: Vec<String> = self.fixtures.values().map(|f| f.router.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    fn knows(&self, router: &str) -> bool {
        let site = site_key(router);
        self.fixtures.keys().any(|(r, _, _)| r == site)
    }

    fn answer(&self, router: &str, command: &str, arg: &str) -> Result<String, LgError> {
        if !self.knows(router) {
            return Ok(format!("{NOT_EXISTING}\n"));
        }
        let key = (site_key(router).to_string(), command.to_string(), arg.to_string());
        self.fixtures
            .get(&key)
            .map(|f| f.body.clone())
            .ok_or_else(|| LgError::MissingResponse {
                router: router.to_string(),
                command: command.to_string(),
                arg: arg.to_string(),
            })
    }
}

impl LookingGlass for FixtureCorpus {
    fn summary(&self, router: &str) -> Result<String, LgError> {
        self.answer(router, "summary", "-")
    }

    fn routes(&self, router: &str, target: IpAddr) -> Result<String, LgError> {
        self.answer(router, "routes", &target.to_string())
    }
}
