//! `(D_KL, δ)`-simulation of a distribution over `{0,1}^n` from prefix
//! conditional samples.
//!
//! Every edge `(w, b)` of the marginal tree is estimated by `m = ⌈n/δ⌉`
//! conditional draws under `w`. The eager form ([`preprocess`]) estimates all
//! `2^n − 1` edges up front; the lazy form ([`SimulationState`]) estimates an
//! edge the first time it is touched and memoizes both siblings.
//!
//! The randomness for the edge at `w` is the stream keyed by `(seed, w)`, so
//! the order in which edges get estimated does not matter. Given the same seed
//! and the same user randomness, the lazy and eager forms answer bit-for-bit
//! identically.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::bits::{BitString, Prefix};
use crate::error::{domain, Error, Result};
use crate::oracle::{ConditionalSampler, PrefixOracle, SampleBudget};
use crate::rng::{tags, RandomStream};
use crate::tree::MarginalTree;
use crate::util::ceil_snapped;

/// Largest `n` accepted by [`preprocess`].
pub const MAX_PREPROCESS_N: usize = 20;

/// `k` out of `m` conditional draws had the estimated bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeEstimate {
    pub k: u64,
    pub m: u64,
}

impl EdgeEstimate {
    pub fn value(&self) -> f64 {
        self.k as f64 / self.m as f64
    }

    /// The estimate for the other bit under the same prefix.
    pub fn sibling(&self) -> EdgeEstimate {
        EdgeEstimate {
            k: self.m - self.k,
            m: self.m,
        }
    }

    pub fn ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.k), BigInt::from(self.m))
    }
}

/// `m = ⌈n/δ⌉`.
pub fn samples_per_edge(n: usize, delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return domain(format!("delta must be positive, got {delta}"));
    }
    if n == 0 {
        return domain("n must be positive");
    }
    Ok(ceil_snapped(n as f64 / delta))
}

/// Estimates the probability of bit `b` after `w` from `⌈n/δ⌉` conditional
/// samples.
pub fn est_simulation_edge<S: ConditionalSampler>(
    oracle: &mut PrefixOracle<S>,
    delta: f64,
    w: &Prefix,
    b: bool,
    rng: &mut RandomStream,
) -> Result<EdgeEstimate> {
    let m = samples_per_edge(oracle.n(), delta)?;
    w.validate(oracle.n())?;
    Ok(estimate(oracle, m, w, b, rng))
}

fn estimate<S: ConditionalSampler>(
    oracle: &mut PrefixOracle<S>,
    m: u64,
    w: &Prefix,
    b: bool,
    rng: &mut RandomStream,
) -> EdgeEstimate {
    let at = w.len();
    let k = (0..m)
        .filter(|_| oracle.prefix_conditional_sample(w, rng).bit(at) == b)
        .count() as u64;
    EdgeEstimate { k, m }
}

fn edge_stream(seed: u64, w: &Prefix) -> RandomStream {
    RandomStream::for_prefix(seed, tags::EDGE, w)
}

/// The fully learned distribution `μ̃` of the eager simulation.
#[derive(Clone, Debug)]
pub struct LearnedDistribution {
    n: usize,
    m: u64,
    /// Estimates for bit 1, in heap order of the prefixes.
    ones: Vec<EdgeEstimate>,
    tree: MarginalTree,
}

/// Estimates every edge of the tree. Costs `(2^n − 1)·⌈n/δ⌉` conditional
/// samples.
pub fn preprocess<S: ConditionalSampler>(
    oracle: &mut PrefixOracle<S>,
    delta: f64,
    seed: u64,
) -> Result<LearnedDistribution> {
    let n = oracle.n();
    if n > MAX_PREPROCESS_N {
        return Err(Error::Capability {
            what: "preprocessing length n",
            got: n,
            limit: MAX_PREPROCESS_N,
        });
    }
    let m = samples_per_edge(n, delta)?;
    let ones: Vec<EdgeEstimate> = Prefix::all(n)
        .map(|w| estimate(oracle, m, &w, true, &mut edge_stream(seed, &w)))
        .collect();
    LearnedDistribution::from_estimates(n, ones)
}

impl LearnedDistribution {
    /// From the bit-1 estimates of all prefixes in heap order.
    pub fn from_estimates(n: usize, ones: Vec<EdgeEstimate>) -> Result<Self> {
        if ones.len() != (1usize << n) - 1 {
            return domain(format!("need {} estimates, got {}", (1usize << n) - 1, ones.len()));
        }
        let m = ones.first().map_or(1, |e| e.m);
        if ones.iter().any(|e| e.m != m || e.k > e.m) {
            return domain("estimates must share m and satisfy k <= m");
        }
        let tree = MarginalTree::from_table(n, ones.iter().map(EdgeEstimate::value).collect())?;
        Ok(Self { n, m, ones, tree })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Conditional samples spent learning: `(2^n − 1)·m`.
    pub fn sample_cost(&self) -> u64 {
        self.ones.len() as u64 * self.m
    }

    pub fn tree(&self) -> &MarginalTree {
        &self.tree
    }

    pub fn edge(&self, w: &Prefix, b: bool) -> EdgeEstimate {
        let one = self.ones[w.heap_index()];
        if b {
            one
        } else {
            one.sibling()
        }
    }

    /// `μ̃(x)`.
    pub fn query(&self, x: &BitString) -> Result<f64> {
        check_len(x, self.n)?;
        Ok(path_product(x, |w, b| self.edge(w, b).value()))
    }

    /// `μ̃(x)` as an exact fraction.
    pub fn query_exact(&self, x: &BitString) -> Result<BigRational> {
        check_len(x, self.n)?;
        let mut p = BigRational::one();
        for i in 0..self.n {
            p *= self.edge(&x.prefix(i), x.bit(i)).ratio();
        }
        Ok(p)
    }

    /// Draws `x ∼ μ̃` and returns it with `μ̃(x)`.
    pub fn sample(&self, rng: &mut RandomStream) -> (BitString, f64) {
        walk(self.n, rng, |w| self.edge(w, true))
    }
}

fn check_len(x: &BitString, n: usize) -> Result<()> {
    if x.len() != n {
        return domain(format!("element has length {}, expected {n}", x.len()));
    }
    Ok(())
}

/// Product over all `n` edges of `x`, without stopping at a zero.
fn path_product(x: &BitString, mut edge: impl FnMut(&Prefix, bool) -> f64) -> f64 {
    let mut w = Prefix::empty();
    let mut p = 1.0;
    for &b in x.bits() {
        p *= edge(&w, b);
        w.push(b);
    }
    p
}

/// Root-to-leaf walk: one uniform per level, bit 1 iff `u < f(w)`.
fn walk(n: usize, rng: &mut RandomStream, mut one: impl FnMut(&Prefix) -> EdgeEstimate) -> (BitString, f64) {
    let mut w = Prefix::empty();
    let mut p = 1.0;
    for _ in 0..n {
        let est = one(&w);
        let b = rng.random::<f64>() < est.value();
        p *= if b { est.value() } else { est.sibling().value() };
        w.push(b);
    }
    (BitString::new(w.bits().to_vec()), p)
}

/// The lazy simulation.
#[derive(Debug)]
pub struct SimulationState<S> {
    n: usize,
    m: u64,
    delta: f64,
    seed: u64,
    oracle: PrefixOracle<S>,
    hist: BTreeMap<(Prefix, bool), EdgeEstimate>,
}

/// Starts a lazy simulation. Costs nothing.
pub fn init_simulation<S: ConditionalSampler>(
    oracle: PrefixOracle<S>,
    delta: f64,
    seed: u64,
) -> Result<SimulationState<S>> {
    let n = oracle.n();
    let m = samples_per_edge(n, delta)?;
    Ok(SimulationState {
        n,
        m,
        delta,
        seed,
        oracle,
        hist: BTreeMap::new(),
    })
}

impl<S: ConditionalSampler> SimulationState<S> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn budget(&self) -> &SampleBudget {
        self.oracle.budget()
    }

    pub fn oracle(&self) -> &PrefixOracle<S> {
        &self.oracle
    }

    pub fn into_oracle(self) -> PrefixOracle<S> {
        self.oracle
    }

    pub fn hist(&self) -> &BTreeMap<(Prefix, bool), EdgeEstimate> {
        &self.hist
    }

    /// Number of prefixes whose edges have been estimated.
    pub fn distinct_pairs(&self) -> usize {
        self.hist.len() / 2
    }

    /// The estimate for `(w, b)`, estimating both siblings on a miss.
    pub fn access_edge(&mut self, w: &Prefix, b: bool) -> EdgeEstimate {
        if let Some(&est) = self.hist.get(&(w.clone(), b)) {
            return est;
        }
        let est = estimate(&mut self.oracle, self.m, w, b, &mut edge_stream(self.seed, w));
        self.hist.insert((w.clone(), b), est);
        self.hist.insert((w.clone(), !b), est.sibling());
        est
    }

    /// The simulated mass of `x`. Touches all `n` edges on the path.
    pub fn query(&mut self, x: &BitString) -> Result<f64> {
        check_len(x, self.n)?;
        Ok(path_product(x, |w, b| self.access_edge(w, b).value()))
    }

    /// The simulated mass of `x` as an exact fraction.
    pub fn query_exact(&mut self, x: &BitString) -> Result<BigRational> {
        check_len(x, self.n)?;
        let mut p = BigRational::one();
        for i in 0..self.n {
            p *= self.access_edge(&x.prefix(i), x.bit(i)).ratio();
        }
        Ok(p)
    }

    /// Draws from the simulated distribution, returning the element and its
    /// simulated mass.
    pub fn sample(&mut self, rng: &mut RandomStream) -> (BitString, f64) {
        let n = self.n;
        walk(n, rng, |w| self.access_edge(w, true))
    }

    /// Estimates every remaining edge and returns the learned distribution.
    pub fn materialize(&mut self) -> Result<LearnedDistribution> {
        if self.n > MAX_PREPROCESS_N {
            return Err(Error::Capability {
                what: "materialized length n",
                got: self.n,
                limit: MAX_PREPROCESS_N,
            });
        }
        let ones = Prefix::all(self.n).map(|w| self.access_edge(&w, true)).collect();
        LearnedDistribution::from_estimates(self.n, ones)
    }
}

/// Exact sum of `μ̃(x)` over all `x`. Used to check realization.
pub fn total_exact_mass(ld: &LearnedDistribution) -> Result<BigRational> {
    let mut total = BigRational::zero();
    for x in BitString::all(ld.n()) {
        total += ld.query_exact(&x)?;
    }
    Ok(total)
}
