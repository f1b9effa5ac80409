use std::collections::BTreeMap;
use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, ValidatedPath};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDelay {
    pub ms: f64,
    /// The far hop answered faster than the near hop; `ms` was set to 0.
    pub clamped: bool,
}

fn min_rtt(rtts: &[f64]) -> Option<f64> {
    rtts.iter().copied().filter(|r| r.is_finite()).reduce(f64::min)
}

/// Minimum far-IP RTT minus minimum near-IP RTT.
pub fn link_delay(path: &ValidatedPath) -> Result<LinkDelay, AnalysisError> {
    let hops = &path.trace.hops;
    let far = min_rtt(&hops[path.far_hop].rtts).ok_or(AnalysisError::MissingRtt(path.matched_far_ip))?;
    let near = path
        .far_hop
        .checked_sub(1)
        .and_then(|i| min_rtt(&hops[i].rtts))
        .ok_or(AnalysisError::MissingRtt(path.near_ip))?;
    let d = far - near;
    Ok(if d < 0.0 {
        LinkDelay { ms: 0.0, clamped: true }
    } else {
        LinkDelay { ms: d, clamped: false }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySample {
    pub far_ip: IpAddr,
    pub time: u64,
    pub dst: IpAddr,
    pub delay_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelaySeries {
    pub samples: Vec<DelaySample>,
    pub clamped: usize,
}

impl DelaySeries {
    /// Delays of every path that has RTTs on both sides of the link. Paths
    /// missing either are skipped and counted in the second return value.
    pub fn from_paths<'a>(paths: impl IntoIterator<Item = &'a ValidatedPath>) -> (DelaySeries, usize) {
        let mut series = DelaySeries::default();
        let mut skipped = 0;
        for p in paths {
            match link_delay(p) {
                Ok(d) => {
                    series.clamped += d.clamped as usize;
                    series.samples.push(DelaySample {
                        far_ip: p.matched_far_ip,
                        time: p.time(),
                        dst: p.dst(),
                        delay_ms: d.ms,
                    });
                }
                Err(_) => skipped += 1,
            }
        }
        (series, skipped)
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.delay_ms).collect()
    }

    pub fn for_link(&self, far_ip: &IpAddr) -> Vec<&DelaySample> {
        self.samples.iter().filter(|s| s.far_ip == *far_ip).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("far_ip,time,dst,delay_ms\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{:.6}\n", s.far_ip, s.time, s.dst, s.delay_ms));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Time,
    Dst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupKey {
    Time(u64),
    Dst(IpAddr),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySummary {
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub count: usize,
}

/// Linear interpolation between closest ranks; `sorted` must be ascending
/// and nonempty, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarize(mut v: Vec<f64>) -> DelaySummary {
    v.sort_by(f64::total_cmp);
    DelaySummary {
        median: percentile(&v, 0.5),
        p25: percentile(&v, 0.25),
        p75: percentile(&v, 0.75),
        count: v.len(),
    }
}

/// Order statistics per link and per time point or destination.
pub fn delay_stats(series: &DelaySeries, by: GroupBy) -> BTreeMap<(IpAddr, GroupKey), DelaySummary> {
    let mut groups: BTreeMap<(IpAddr, GroupKey), Vec<f64>> = BTreeMap::new();
    for s in &series.samples {
        let key = match by {
            GroupBy::Time => GroupKey::Time(s.time),
            GroupBy::Dst => GroupKey::Dst(s.dst),
        };
        groups.entry((s.far_ip, key)).or_default().push(s.delay_ms);
    }
    groups.into_iter().map(|(k, v)| (k, summarize(v))).collect()
}

/// Counts per `bin_ms` wide bin from 0 to `max_ms`; the last bin also holds
/// everything above.
pub fn delay_histogram(values: &[f64], bin_ms: f64, max_ms: f64) -> Vec<usize> {
    let bins = ((max_ms / bin_ms).ceil() as usize).max(1);
    let mut out = vec![0; bins];
    for v in values {
        let i = ((v.max(0.0) / bin_ms) as usize).min(bins - 1);
        out[i] += 1;
    }
    out
}
