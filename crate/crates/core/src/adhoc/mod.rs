//! The ad-hoc task: a hidden vector `p_1..p_n` of Bernoulli parameters that
//! is either sign-balanced around ½ or biased toward the low value, probed one
//! index at a time.
//!
//! [`hard`] builds the random distributions over `{0,1}^n` whose mass at a
//! challenge element is hard to approximate, and [`thresholds`] evaluates the
//! constants that separate their two cases.

pub mod hard;
pub mod thresholds;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::rng::RandomStream;
use crate::util::ceil_snapped;

/// A hidden vector of Bernoulli parameters with draw counters.
#[derive(Clone, Debug)]
pub struct AdHocInstance {
    p: Vec<f64>,
    draws: Vec<u64>,
    total: u64,
}

/// Draws each `p_i` as `(1−δ)/2` with probability `(1+r)/2`, else `(1+δ)/2`.
///
/// Requires `0 ≤ δ < 1/3` and `0 ≤ r < 1/12`. `δ = 0` gives the all-½ vector.
pub fn gen_instance(n: usize, delta: f64, r: f64, rng: &mut RandomStream) -> Result<AdHocInstance> {
    if n == 0 {
        return domain("n must be positive");
    }
    if !(0.0..1.0 / 3.0).contains(&delta) {
        return domain(format!("delta must lie in [0, 1/3), got {delta}"));
    }
    if !(0.0..1.0 / 12.0).contains(&r) {
        return domain(format!("r must lie in [0, 1/12), got {r}"));
    }
    let (low, high) = ((1.0 - delta) / 2.0, (1.0 + delta) / 2.0);
    let p = (0..n)
        .map(|_| if rng.random_bool((1.0 + r) / 2.0) { low } else { high })
        .collect();
    AdHocInstance::from_probabilities(p)
}

impl AdHocInstance {
    pub fn from_probabilities(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return domain("n must be positive");
        }
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return domain(format!("probability {bad} outside [0, 1]"));
        }
        Ok(Self {
            draws: vec![0; p.len()],
            p,
            total: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// The hidden vector. For checking experiments, not for testers.
    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// Per-index draw counts, index `i` at position `i − 1`.
    pub fn draws(&self) -> &[u64] {
        &self.draws
    }

    pub fn total_draws(&self) -> u64 {
        self.total
    }

    /// One draw of `Ber(p_i)`, `1 ≤ i ≤ n`.
    pub fn sample_index(&mut self, i: usize, rng: &mut RandomStream) -> Result<bool> {
        if i == 0 || i > self.p.len() {
            return domain(format!("index {i} outside 1..={}", self.p.len()));
        }
        self.draws[i - 1] += 1;
        self.total += 1;
        Ok(rng.random::<f64>() < self.p[i - 1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

/// Outcome of one tester run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdHocOutcome {
    pub verdict: Verdict,
    /// Number of 1 bits seen.
    pub x: u64,
    pub loop_count: u64,
    pub threshold: f64,
    pub n_prime: usize,
    pub q: f64,
}

/// `n′ = ⌈15/r²⌉`, the number of indexes the tester looks at.
pub fn tester_width(r: f64) -> Result<usize> {
    if !(r > 0.0 && r < 1.0) {
        return domain(format!("r must lie in (0, 1), got {r}"));
    }
    Ok(ceil_snapped(15.0 / (r * r)) as usize)
}

/// `q = 10/δ²`, the expected draws per index.
pub fn tester_rate(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("delta must lie in (0, 1), got {delta}"));
    }
    Ok(10.0 / (delta * delta))
}

/// `½qn′ − ¼rδqn′`, halfway between the expected counts of 1 bits under the
/// two cases.
pub fn tester_threshold(delta: f64, r: f64) -> Result<f64> {
    let n_prime = tester_width(r)? as f64;
    let q = tester_rate(delta)?;
    Ok(0.5 * q * n_prime - 0.25 * r * delta * q * n_prime)
}

/// Poissonized tester: `Poisson(n′q)` draws at uniform indexes among the first
/// `n′`, accept iff the number of 1 bits reaches the threshold.
pub fn test_ad_hoc(inst: &mut AdHocInstance, delta: f64, r: f64, rng: &mut RandomStream) -> Result<AdHocOutcome> {
    let n_prime = tester_width(r)?;
    let q = tester_rate(delta)?;
    if inst.n() < n_prime {
        return Err(Error::Capability {
            what: "instance length for the tester",
            got: inst.n(),
            limit: n_prime,
        });
    }
    let threshold = tester_threshold(delta, r)?;
    let lambda = n_prime as f64 * q;
    let poisson = Poisson::new(lambda).map_err(|e| Error::Domain(e.to_string()))?;
    let loop_count = poisson.sample(rng) as u64;
    let mut x = 0;
    for _ in 0..loop_count {
        let i = rng.random_range(1..=n_prime);
        x += inst.sample_index(i, rng)? as u64;
    }
    let verdict = if x as f64 >= threshold {
        Verdict::Accept
    } else {
        Verdict::Reject
    };
    Ok(AdHocOutcome {
        verdict,
        x,
        loop_count,
        threshold,
        n_prime,
        q,
    })
}
