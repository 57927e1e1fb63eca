//! Running prefix-model algorithms against other conditional models.
//!
//! A breakdown tree over a domain is a complete binary tree of subsets whose
//! leaves are singletons or empty. Reading the left/right turns on the path to
//! an element as bits turns every node condition into a prefix condition, so
//! any prefix-model algorithm runs unchanged with `n` set to the tree height.
//!
//! For the interval model over `{1..N}` the tree splits intervals in half:
//! element `e` is encoded as `binary(e − 1)` on `ℓ = ⌈log2 N⌉` bits, and the
//! codes `N..2^ℓ` are empty padding leaves. Prefix conditions are already
//! subcube conditions (see [`subcube_condition`]), so the subcube model needs
//! no adapter.

use rand::Rng;

use crate::bits::{BitString, Prefix};
use crate::error::{domain, Error, Result};
use crate::oracle::{sample_in_range, ConditionalSampler, ExplicitDistribution, PrefixOracle};
use crate::rng::RandomStream;

/// A complete binary tree of domain subsets, in heap order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BreakdownTree {
    height: usize,
    nodes: Vec<Vec<usize>>,
}

impl BreakdownTree {
    pub fn height(&self) -> usize {
        self.height
    }

    /// The set held by the node reached by `path` (`|path| ≤ height`).
    pub fn node(&self, path: &[bool]) -> &[usize] {
        let index = (1usize << path.len()) - 1 + path.iter().fold(0, |acc, &b| (acc << 1) | b as usize);
        &self.nodes[index]
    }

    /// Verifies the structural invariants against the domain `omega`.
    pub fn check(&self, omega: &[usize]) -> Result<()> {
        let mut root = self.nodes[0].clone();
        root.sort_unstable();
        let mut want = omega.to_vec();
        want.sort_unstable();
        if root != want {
            return Err(Error::Inconsistency("root does not hold the domain".into()));
        }
        let inner = (1usize << self.height) - 1;
        for i in 0..inner {
            let mut union: Vec<usize> = self.nodes[2 * i + 1]
                .iter()
                .chain(&self.nodes[2 * i + 2])
                .copied()
                .collect();
            union.sort_unstable();
            let len = union.len();
            union.dedup();
            if union.len() != len {
                return Err(Error::Inconsistency(format!("children of node {i} overlap")));
            }
            let mut parent = self.nodes[i].clone();
            parent.sort_unstable();
            if parent != union {
                return Err(Error::Inconsistency(format!("node {i} is not the union of its children")));
            }
        }
        if let Some(bad) = self.nodes[inner..].iter().position(|leaf| leaf.len() > 1) {
            return Err(Error::Inconsistency(format!("leaf {bad} holds more than one element")));
        }
        Ok(())
    }
}

/// Prefix view of the interval model over `{1..N}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntervalAdapter {
    domain_size: usize,
    height: usize,
}

/// Balanced interval breakdown of `{1..N}`. `N = 1` still gets one level so
/// that the prefix domain is non-trivial.
pub fn interval_breakdown(domain_size: usize) -> Result<IntervalAdapter> {
    if domain_size == 0 {
        return domain("the interval domain needs N >= 1");
    }
    let height = (usize::BITS - (domain_size - 1).leading_zeros()).max(1) as usize;
    Ok(IntervalAdapter { domain_size, height })
}

impl IntervalAdapter {
    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    /// `ℓ`, the length of the encoded strings.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn encode(&self, element: usize) -> Result<BitString> {
        if element == 0 || element > self.domain_size {
            return domain(format!("element {element} outside 1..={}", self.domain_size));
        }
        Ok(BitString::from_index(self.height, element - 1))
    }

    /// `None` for padding codes.
    pub fn decode(&self, x: &BitString) -> Option<usize> {
        if x.len() != self.height {
            return None;
        }
        let e = x.index() + 1;
        (e <= self.domain_size).then_some(e)
    }

    /// The interval `{a..b}` held by the node `w`, or `None` for `∅`.
    pub fn interval(&self, w: &Prefix) -> Option<(usize, usize)> {
        let (lo, hi) = w.cylinder_range(self.height);
        (lo < self.domain_size).then(|| (lo + 1, (hi + 1).min(self.domain_size)))
    }

    /// The explicit breakdown tree. Intended for small `N`.
    pub fn breakdown_tree(&self) -> BreakdownTree {
        let nodes = (0..(1usize << (self.height + 1)) - 1)
            .map(|i| {
                let w = Prefix::from_heap_index(i);
                if w.len() == self.height {
                    let e = w.cylinder_range(self.height).0 + 1;
                    if e <= self.domain_size {
                        vec![e]
                    } else {
                        vec![]
                    }
                } else {
                    self.interval(&w).map(|(a, b)| (a..=b).collect()).unwrap_or_default()
                }
            })
            .collect();
        BreakdownTree {
            height: self.height,
            nodes,
        }
    }

    /// Wraps an interval-conditional oracle so it answers prefix draws.
    pub fn adapt<O: IntervalSampler>(&self, native: O) -> Result<PrefixOracle<AdaptedSampler<O>>> {
        if native.domain_size() != self.domain_size {
            return domain(format!(
                "native oracle has domain size {}, adapter expects {}",
                native.domain_size(),
                self.domain_size
            ));
        }
        Ok(PrefixOracle::new(AdaptedSampler {
            adapter: *self,
            native,
            native_calls: 0,
        }))
    }
}

/// The prefix condition `w` as a subcube condition: fixed coordinates are
/// `Some(bit)`, free ones `None`.
pub fn subcube_condition(w: &Prefix, n: usize) -> Vec<Option<bool>> {
    w.bits()
        .iter()
        .map(|&b| Some(b))
        .chain(std::iter::repeat_n(None, n - w.len()))
        .collect()
}

/// A hidden distribution over `{1..N}` that answers interval conditions.
pub trait IntervalSampler {
    fn domain_size(&self) -> usize;

    /// Draws `e ∼ μ | a ≤ e ≤ b`.
    fn sample_interval(&mut self, a: usize, b: usize, rng: &mut RandomStream) -> usize;
}

/// An explicit distribution over `{1..N}`.
#[derive(Clone, Debug)]
pub struct IntervalDistribution {
    masses: Vec<f64>,
}

impl IntervalDistribution {
    /// `masses[e - 1] = μ(e)`.
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return domain("empty domain");
        }
        if masses.iter().any(|&m| !(m >= 0.0)) {
            return domain("masses must be non-negative");
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return domain(format!("masses sum to {total}, not 1"));
        }
        Ok(Self { masses })
    }

    /// Random masses from normalized exponentials.
    pub fn random<R: Rng + ?Sized>(domain_size: usize, rng: &mut R) -> Result<Self> {
        let raw: Vec<f64> = (0..domain_size)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        Self::new(raw.into_iter().map(|m| m / total).collect())
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// The same distribution over `{0,1}^ℓ`, padding codes carrying zero mass.
    pub fn encoded(&self, adapter: &IntervalAdapter) -> Result<ExplicitDistribution> {
        if adapter.domain_size != self.masses.len() {
            return domain("adapter and distribution disagree on N");
        }
        let mut padded = self.masses.clone();
        padded.resize(1 << adapter.height, 0.0);
        ExplicitDistribution::new(adapter.height, padded)
    }
}

impl IntervalSampler for IntervalDistribution {
    fn domain_size(&self) -> usize {
        self.masses.len()
    }

    fn sample_interval(&mut self, a: usize, b: usize, rng: &mut RandomStream) -> usize {
        assert!(1 <= a && a <= b && b <= self.masses.len(), "bad interval {a}..={b}");
        sample_in_range(&self.masses, a - 1, b - 1, rng) + 1
    }
}

/// Answers prefix draws with one native interval draw each. Prefixes that map
/// to `∅` get a uniform element of their cylinder without a native call.
#[derive(Debug)]
pub struct AdaptedSampler<O> {
    adapter: IntervalAdapter,
    native: O,
    native_calls: u64,
}

impl<O> AdaptedSampler<O> {
    pub fn native_calls(&self) -> u64 {
        self.native_calls
    }

    pub fn native(&self) -> &O {
        &self.native
    }
}

impl<O: IntervalSampler> ConditionalSampler for AdaptedSampler<O> {
    fn n(&self) -> usize {
        self.adapter.height
    }

    fn sample_extension(&mut self, w: &Prefix, rng: &mut RandomStream) -> BitString {
        match self.adapter.interval(w) {
            Some((a, b)) => {
                self.native_calls += 1;
                let e = self.native.sample_interval(a, b, rng);
                BitString::from_index(self.adapter.height, e - 1)
            }
            None => {
                let (lo, hi) = w.cylinder_range(self.adapter.height);
                BitString::from_index(self.adapter.height, rng.random_range(lo..=hi))
            }
        }
    }
}
