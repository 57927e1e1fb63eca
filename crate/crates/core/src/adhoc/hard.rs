//! Random distributions built from one `±1` sign per prefix.
//!
//! `μ(1|w) = (1 + s_w δ)/2`. A yes-instance pairs `μ` with a uniform challenge
//! element; a no-instance draws the challenge from the tilted distribution
//! `μ′(1|w) = (1 − s_w r)/2`, which favours the low-mass branches of `μ`.
//! Default parameters are `δ = √2·ε/√n` and `r = 8/√n`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::bits::{BitString, Prefix};
use crate::error::{domain, Error, Result};
use crate::oracle::{ConditionalSampler, PrefixOracle};
use crate::rng::{prefix_key, tags, RandomStream};
use crate::tree::MarginalTree;

fn sign_of(seed: u64, w: &Prefix) -> i8 {
    if prefix_key(seed, tags::SIGN, w) >> 63 == 1 {
        1
    } else {
        -1
    }
}

/// Signs `s_w`, each a fixed function of `(seed, w)`, recorded as they are
/// looked up.
#[derive(Clone, Debug)]
pub struct SignAssignment {
    seed: u64,
    memo: BTreeMap<Prefix, i8>,
}

impl SignAssignment {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            memo: BTreeMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `s_w` without recording it.
    pub fn peek(&self, w: &Prefix) -> i8 {
        sign_of(self.seed, w)
    }

    /// `s_w`, recorded in the materialized map.
    pub fn get(&mut self, w: &Prefix) -> i8 {
        let seed = self.seed;
        *self.memo.entry(w.clone()).or_insert_with(|| sign_of(seed, w))
    }

    pub fn materialized(&self) -> &BTreeMap<Prefix, i8> {
        &self.memo
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Yes,
    No,
}

#[derive(Clone, Debug)]
pub struct HardInstance {
    n: usize,
    delta: f64,
    r: f64,
    label: Label,
    signs: SignAssignment,
    x: BitString,
}

/// A hard instance at `δ = √2·ε/√n`, `r = 8/√n`. No-instances need `r ≤ 1`,
/// i.e. `n ≥ 64`.
pub fn gen_hard_instance(n: usize, epsilon: f64, label: Label, seed: u64) -> Result<HardInstance> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return domain(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let root = (n as f64).sqrt();
    HardInstance::with_params(n, 2f64.sqrt() * epsilon / root, 8.0 / root, label, seed)
}

impl HardInstance {
    /// A hard instance with explicit `δ` and `r`.
    pub fn with_params(n: usize, delta: f64, r: f64, label: Label, seed: u64) -> Result<Self> {
        if n == 0 {
            return domain("n must be positive");
        }
        if !(0.0..=1.0).contains(&delta) {
            return domain(format!("delta must lie in [0, 1], got {delta}"));
        }
        if label == Label::No && !(0.0..=1.0).contains(&r) {
            return domain(format!("r = {r} outside [0, 1]; the tilted distribution needs n >= 64"));
        }
        let mut signs = SignAssignment::new(seed);
        let mut rng = RandomStream::for_index(seed, tags::INSTANCE, 0);
        let mut w = Prefix::empty();
        for _ in 0..n {
            let bit = match label {
                Label::Yes => rng.random::<bool>(),
                Label::No => rng.random::<f64>() < (1.0 - signs.get(&w) as f64 * r) / 2.0,
            };
            w.push(bit);
        }
        Ok(Self {
            n,
            delta,
            r,
            label,
            signs,
            x: BitString::new(w.bits().to_vec()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn challenge(&self) -> &BitString {
        &self.x
    }

    pub fn signs(&self) -> &SignAssignment {
        &self.signs
    }

    pub fn signs_mut(&mut self) -> &mut SignAssignment {
        &mut self.signs
    }

    /// `μ(1|w)`.
    pub fn marginal(&mut self, w: &Prefix) -> f64 {
        (1.0 + self.signs.get(w) as f64 * self.delta) / 2.0
    }

    /// `μ` as a generator-backed tree.
    pub fn mu(&self) -> MarginalTree {
        let (seed, delta) = (self.signs.seed, self.delta);
        MarginalTree::from_fn(self.n, move |w| (1.0 + sign_of(seed, w) as f64 * delta) / 2.0)
    }

    /// The tilted distribution `μ′`.
    pub fn tilted(&self) -> MarginalTree {
        let (seed, r) = (self.signs.seed, self.r);
        MarginalTree::from_fn(self.n, move |w| (1.0 - sign_of(seed, w) as f64 * r) / 2.0)
    }

    /// Prefix-conditional access to `μ`.
    pub fn oracle(&self) -> PrefixOracle<MarginalTree> {
        PrefixOracle::new(self.mu())
    }
}

/// Draws once under `w` and counts the intermediate prefixes `W_j`
/// (`|w| ≤ j < n`) of the draw that are also prefixes of `x`.
pub fn effective_samples<S: ConditionalSampler>(
    oracle: &mut PrefixOracle<S>,
    w: &Prefix,
    x: &BitString,
    rng: &mut RandomStream,
) -> usize {
    let y = oracle.prefix_conditional_sample(w, rng);
    let agree = y.bits().iter().zip(x.bits()).take_while(|(a, b)| a == b).count();
    (w.len()..oracle.n()).filter(|&j| j <= agree).count()
}

/// Largest `n` accepted by [`off_path_posterior`].
pub const MAX_POSTERIOR_N: usize = 4;

/// Exact posterior of the signs off the path of `x`, given `x`.
///
/// Enumerates every sign assignment with prior `2^−(2^n−1)` and weighs it by
/// the chance of drawing `x` (uniform for yes, `μ′` for no). Keys list the
/// off-path signs in heap order of their prefixes.
pub fn off_path_posterior(
    n: usize,
    r: &BigRational,
    label: Label,
    x: &BitString,
) -> Result<BTreeMap<Vec<i8>, BigRational>> {
    if n == 0 || x.len() != n {
        return domain("x must have length n >= 1");
    }
    if n > MAX_POSTERIOR_N {
        return Err(Error::Capability {
            what: "posterior enumeration length n",
            got: n,
            limit: MAX_POSTERIOR_N,
        });
    }
    let prefixes: Vec<Prefix> = Prefix::all(n).collect();
    let on_path: Vec<bool> = prefixes.iter().map(|w| w.is_prefix_of(x)).collect();
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let mut joint: BTreeMap<Vec<i8>, BigRational> = BTreeMap::new();
    for code in 0u64..1 << prefixes.len() {
        let sign = |i: usize| if code >> i & 1 == 1 { 1i8 } else { -1 };
        let likelihood = match label {
            Label::Yes => one.clone() / BigRational::from_integer(BigInt::from(1u64 << n)),
            Label::No => (0..n).fold(one.clone(), |acc, j| {
                let s = BigRational::from_integer(BigInt::from(sign(x.prefix(j).heap_index())));
                let p_one = (&one - s * r) / &two;
                acc * if x.bit(j) { p_one } else { &one - p_one }
            }),
        };
        let key: Vec<i8> = (0..prefixes.len()).filter(|&i| !on_path[i]).map(sign).collect();
        *joint.entry(key).or_insert_with(BigRational::zero) += likelihood;
    }
    let total: BigRational = joint.values().sum();
    if total.is_zero() {
        return Err(Error::Inconsistency(format!("{x} has probability zero")));
    }
    Ok(joint.into_iter().map(|(k, v)| (k, v / &total)).collect())
}
