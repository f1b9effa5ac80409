use std::collections::BTreeSet;
use std::net::IpAddr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::ecmp::splitmix;
use crate::model::BorderLink;

/// Parameters of the per-link delay draw. Queueing and spike terms are
/// log-normal, given by their median and the sigma of the underlying normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelayParams {
    pub base_ms: f64,
    pub queue_median_ms: f64,
    pub queue_sigma: f64,
    pub spike_probability: f64,
    pub spike_median_ms: f64,
    pub spike_sigma: f64,
}

impl Default for DelayParams {
    fn default() -> Self {
        DelayParams {
            base_ms: 0.2,
            queue_median_ms: 28.0,
            queue_sigma: 0.35,
            spike_probability: 0.02,
            spike_median_ms: 600.0,
            spike_sigma: 0.8,
        }
    }
}

impl DelayParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let nonneg = [
            self.base_ms,
            self.queue_median_ms,
            self.queue_sigma,
            self.spike_median_ms,
            self.spike_sigma,
        ];
        if nonneg.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SimError::InvalidDelay("parameters must be finite and nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.spike_probability) {
            return Err(SimError::InvalidDelay("spike_probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

fn lognormal_draw(rng: &mut ChaCha8Rng, median: f64, sigma: f64) -> f64 {
    if median <= 0.0 {
        return 0.0;
    }
    if sigma == 0.0 {
        return median;
    }
    LogNormal::new(median.ln(), sigma)
        .expect("validated parameters")
        .sample(rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel {
    pub params: DelayParams,
    pub seed: u64,
    /// Far-end addresses of the links this model serves. `None` accepts any
    /// link.
    known: Option<BTreeSet<IpAddr>>,
}

impl DelayModel {
    pub fn new(params: DelayParams, seed: u64) -> Result<DelayModel, SimError> {
        params.validate()?;
        Ok(DelayModel {
            params,
            seed,
            known: None,
        })
    }

    pub fn restricted_to(mut self, far_ips: impl IntoIterator<Item = IpAddr>) -> DelayModel {
        self.known = Some(far_ips.into_iter().collect());
        self
    }

    fn rng_for(&self, link: &BorderLink, time: u64, nonce: u64) -> ChaCha8Rng {
        let mut h = splitmix(self.seed ^ 0x6465_6c61_7900);
        for b in link.near_router.name().bytes() {
            h = splitmix(h ^ b as u64);
        }
        h = splitmix(h ^ crate::model::ip_to_bits(&link.far_ip) as u64);
        h = splitmix(h ^ (crate::model::ip_to_bits(&link.far_ip) >> 64) as u64);
        h = splitmix(h ^ time);
        h = splitmix(h ^ nonce);
        ChaCha8Rng::seed_from_u64(h)
    }
}

/// One draw of the delay across `link` at `time`. `nonce` separates draws
/// that share a link and time (the simulator passes a destination hash).
pub fn sample_link_delay(
    model: &DelayModel,
    link: &BorderLink,
    time: u64,
    nonce: u64,
) -> Result<f64, SimError> {
    if let Some(known) = &model.known {
        if !known.contains(&link.far_ip) {
            return Err(SimError::UnknownLink(link.far_ip));
        }
    }
    let p = &model.params;
    let mut rng = model.rng_for(link, time, nonce);
    let mut delay = p.base_ms + lognormal_draw(&mut rng, p.queue_median_ms, p.queue_sigma);
    if p.spike_probability > 0.0 && rng.random::<f64>() < p.spike_probability {
        delay += lognormal_draw(&mut rng, p.spike_median_ms, p.spike_sigma);
    }
    Ok(delay)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Asn, RouterId};

    fn link() -> BorderLink {
        let he = Asn::new(6939).unwrap();
        let far = Asn::new(20940).unwrap();
        BorderLink::new(
            "184.105.64.129".parse().unwrap(),
            "103.247.139.17".parse().unwrap(),
            RouterId::new("core1.hkg1.he.net", he).unwrap(),
            RouterId::new("hkix.as20940", far).unwrap(),
            Some(10.0),
        )
        .unwrap()
    }

    fn draws(model: &DelayModel, n: u64) -> Vec<f64> {
        let l = link();
        (0..n)
            .map(|i| sample_link_delay(model, &l, 1_623_801_600 + (i / 254) * 900, i % 254).unwrap())
            .collect()
    }

    #[test]
    fn deterministic_under_seed() {
        let m = DelayModel::new(DelayParams::default(), 9).unwrap();
        assert_eq!(draws(&m, 100), draws(&m, 100));
        let other = DelayModel::new(DelayParams::default(), 10).unwrap();
        assert_ne!(draws(&m, 100), draws(&other, 100));
    }

    #[test]
    fn default_distribution_shape() {
        let m = DelayModel::new(DelayParams::default(), 1).unwrap();
        let mut d = draws(&m, 10_000);
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = (d[4999] + d[5000]) / 2.0;
        assert!((20.0..=40.0).contains(&median), "{median}");
        let within = d.iter().filter(|v| **v >= 0.0 && **v <= 340.0).count();
        assert!(within >= 9_500, "{within}");
    }

    #[test]
    fn no_spikes_bounds_the_tail() {
        let params = DelayParams {
            spike_probability: 0.0,
            ..DelayParams::default()
        };
        let m = DelayModel::new(params, 3).unwrap();
        // 6 sigma above the median of the queueing term
        let bound = params.base_ms + params.queue_median_ms * (6.0 * params.queue_sigma).exp();
        assert!(draws(&m, 10_000).iter().all(|v| *v <= bound));
    }

    #[test]
    fn rejects_bad_parameters_and_unknown_links() {
        let bad = DelayParams {
            spike_probability: 1.5,
            ..DelayParams::default()
        };
        assert!(DelayModel::new(bad, 0).is_err());
        let m = DelayModel::new(DelayParams::default(), 0)
            .unwrap()
            .restricted_to(["1.2.3.4".parse().unwrap()]);
        assert!(matches!(
            sample_link_delay(&m, &link(), 0, 0),
            Err(SimError::UnknownLink(_))
        ));
    }
}
