//! Sampling access to a hidden distribution over `{0,1}^n`.
//!
//! A [`ConditionalSampler`] is the hidden distribution itself. A
//! [`PrefixOracle`] wraps one and is the only thing algorithms talk to: it
//! answers prefix-conditional and marginal-prefix draws and keeps an exact
//! ledger of every call.
//!
//! Conditioning on a zero-mass prefix returns a uniform element of the
//! prefix cylinder. Every algorithm in the crate is therefore total.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::bits::{BitString, Prefix};
use crate::error::{domain, Result};
use crate::rng::RandomStream;
use crate::tree::MarginalTree;

/// A hidden distribution that can be sampled under prefix conditions.
pub trait ConditionalSampler {
    fn n(&self) -> usize;

    /// Draws `x ∼ μ` conditioned on `x` extending `w`.
    fn sample_extension(&mut self, w: &Prefix, rng: &mut RandomStream) -> BitString;

    /// Draws only the first free bit of a conditional sample.
    fn sample_next_bit(&mut self, w: &Prefix, rng: &mut RandomStream) -> bool {
        self.sample_extension(w, rng).bit(w.len())
    }
}

impl<S: ConditionalSampler + ?Sized> ConditionalSampler for Box<S> {
    fn n(&self) -> usize {
        (**self).n()
    }

    fn sample_extension(&mut self, w: &Prefix, rng: &mut RandomStream) -> BitString {
        (**self).sample_extension(w, rng)
    }

    fn sample_next_bit(&mut self, w: &Prefix, rng: &mut RandomStream) -> bool {
        (**self).sample_next_bit(w, rng)
    }
}

pub(crate) fn uniform_extension(w: &Prefix, n: usize, rng: &mut RandomStream) -> BitString {
    let mut bits = w.bits().to_vec();
    bits.extend((w.len()..n).map(|_| rng.random::<bool>()));
    BitString::new(bits)
}

/// Walks the tree bit by bit, one uniform per free bit.
impl ConditionalSampler for MarginalTree {
    fn n(&self) -> usize {
        MarginalTree::n(self)
    }

    fn sample_extension(&mut self, w: &Prefix, rng: &mut RandomStream) -> BitString {
        if self.is_null_cylinder(w) {
            return uniform_extension(w, self.n(), rng);
        }
        let mut node = w.clone();
        while node.len() < self.n() {
            let bit = rng.random::<f64>() < self.marginal(&node);
            node.push(bit);
        }
        BitString::new(node.bits().to_vec())
    }

    fn sample_next_bit(&mut self, w: &Prefix, rng: &mut RandomStream) -> bool {
        if self.is_null_cylinder(w) {
            return rng.random::<bool>();
        }
        rng.random::<f64>() < self.marginal(w)
    }
}

/// Inverse-CDF draw of an index in `[lo, hi]` proportional to `masses`,
/// scanning in increasing index order. Falls back to a uniform index when the
/// range carries no mass.
pub(crate) fn sample_in_range(masses: &[f64], lo: usize, hi: usize, rng: &mut RandomStream) -> usize {
    let total: f64 = masses[lo..=hi].iter().sum();
    if total <= 0.0 {
        return rng.random_range(lo..=hi);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = lo;
    for (i, &m) in masses.iter().enumerate().take(hi + 1).skip(lo) {
        if m > 0.0 {
            acc += m;
            last_positive = i;
            if acc > target {
                return i;
            }
        }
    }
    // target rounded up to the total
    last_positive
}

/// A distribution over `{0,1}^n` given by its `2^n` masses in index order.
#[derive(Clone, Debug)]
pub struct ExplicitDistribution {
    n: usize,
    masses: Vec<f64>,
}

impl ExplicitDistribution {
    pub fn new(n: usize, masses: Vec<f64>) -> Result<Self> {
        if n == 0 || n > crate::tree::MAX_TABLE_N {
            return domain(format!("explicit distributions need 1 <= n <= {}", crate::tree::MAX_TABLE_N));
        }
        if masses.len() != 1 << n {
            return domain(format!("expected {} masses, got {}", 1usize << n, masses.len()));
        }
        if masses.iter().any(|&m| !(m >= 0.0)) {
            return domain("masses must be non-negative");
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return domain(format!("masses sum to {total}, not 1"));
        }
        Ok(Self { n, masses })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// The marginal tree representing the same distribution.
    pub fn tree(&self) -> MarginalTree {
        MarginalTree::from_masses(self.n, &self.masses).expect("validated masses")
    }
}

impl ConditionalSampler for ExplicitDistribution {
    fn n(&self) -> usize {
        self.n
    }

    fn sample_extension(&mut self, w: &Prefix, rng: &mut RandomStream) -> BitString {
        let (lo, hi) = w.cylinder_range(self.n);
        BitString::from_index(self.n, sample_in_range(&self.masses, lo, hi, rng))
    }
}

/// Oracle call counters. Counts only grow.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SampleBudget {
    pub conditional_calls: u64,
    pub marginal_calls: u64,
    /// Calls per prefix length, when enabled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub by_prefix_length: Option<BTreeMap<usize, u64>>,
}

impl SampleBudget {
    pub fn total(&self) -> u64 {
        self.conditional_calls + self.marginal_calls
    }

    fn record(&mut self, w: &Prefix) {
        if let Some(h) = &mut self.by_prefix_length {
            *h.entry(w.len()).or_default() += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Conditional,
    Marginal,
}

/// One audited oracle call.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TranscriptEntry {
    pub kind: CallKind,
    pub prefix: String,
    pub result: String,
    pub budget_after: u64,
}

/// The prefix conditional sampling oracle over a hidden distribution.
#[derive(Debug)]
pub struct PrefixOracle<S> {
    sampler: S,
    budget: SampleBudget,
    transcript: Option<Vec<TranscriptEntry>>,
}

impl<S: ConditionalSampler> PrefixOracle<S> {
    pub fn new(sampler: S) -> Self {
        Self {
            sampler,
            budget: SampleBudget::default(),
            transcript: None,
        }
    }

    /// Records every call for later replay.
    pub fn with_transcript(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    /// Tracks call counts per prefix length.
    pub fn with_histogram(mut self) -> Self {
        self.budget.by_prefix_length = Some(BTreeMap::new());
        self
    }

    pub fn n(&self) -> usize {
        self.sampler.n()
    }

    /// Draws `x ∼ μ | x extends w`. Costs one conditional call.
    ///
    /// # Panics
    /// If `w` is not a true prefix for `n`.
    pub fn prefix_conditional_sample(&mut self, w: &Prefix, rng: &mut RandomStream) -> BitString {
        assert!(w.len() < self.n(), "prefix length {} >= n = {}", w.len(), self.n());
        let x = self.sampler.sample_extension(w, rng);
        debug_assert!(w.is_prefix_of(&x));
        self.budget.conditional_calls += 1;
        self.budget.record(w);
        if let Some(t) = &mut self.transcript {
            t.push(TranscriptEntry {
                kind: CallKind::Conditional,
                prefix: w.to_string(),
                result: x.to_string(),
                budget_after: self.budget.total(),
            });
        }
        x
    }

    /// Draws the bit following `w` in a conditional sample. Costs one
    /// marginal call.
    ///
    /// # Panics
    /// If `w` is not a true prefix for `n`.
    pub fn marginal_prefix_sample(&mut self, w: &Prefix, rng: &mut RandomStream) -> bool {
        assert!(w.len() < self.n(), "prefix length {} >= n = {}", w.len(), self.n());
        let bit = self.sampler.sample_next_bit(w, rng);
        self.budget.marginal_calls += 1;
        self.budget.record(w);
        if let Some(t) = &mut self.transcript {
            t.push(TranscriptEntry {
                kind: CallKind::Marginal,
                prefix: w.to_string(),
                result: if bit { "1" } else { "0" }.to_string(),
                budget_after: self.budget.total(),
            });
        }
        bit
    }

    pub fn budget(&self) -> &SampleBudget {
        &self.budget
    }

    pub fn transcript(&self) -> Option<&[TranscriptEntry]> {
        self.transcript.as_deref()
    }

    /// Writes the transcript as JSON lines. No-op without a transcript.
    pub fn write_transcript(&self, mut out: impl Write) -> Result<()> {
        for entry in self.transcript.iter().flatten() {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn sampler(&self) -> &S {
        &self.sampler
    }

    pub fn sampler_mut(&mut self) -> &mut S {
        &mut self.sampler
    }

    pub fn into_sampler(self) -> S {
        self.sampler
    }
}
