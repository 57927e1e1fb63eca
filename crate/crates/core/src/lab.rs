//! Numeric checkers for divergence inequalities, and randomized sweeps over
//! them.
//!
//! Every checker returns whether its inequality holds on the given instance.
//! KL divergence is in bits; inequalities stated in nats carry an explicit
//! `ln 2`.

use std::f64::consts::LN_2;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{bernoulli_kl, kl_bits, kl_by_levels, kl_divergence, total_variation};
use crate::error::{domain, Error, Result};
use crate::rng::{mix, tags, RandomStream};
use crate::tree::MarginalTree;

/// Slack allowed on every inequality.
pub const SLACK: f64 = 1e-12;

/// Largest `m` accepted by [`expected_binomial_kl`].
pub const MAX_BINOMIAL_M: u64 = 64;

/// Largest per-index count accepted by [`check_nonadaptive_run_kl`].
pub const MAX_RUN_COUNT: u64 = 20;

/// A probability vector over `{0..k−1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteDistribution {
    masses: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return domain("empty support");
        }
        if masses.iter().any(|&m| !(m >= 0.0)) {
            return domain("masses must be non-negative");
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("masses sum to {total}, not 1"));
        }
        Ok(Self { masses })
    }

    /// Normalized exponentials over `k` points.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        Self::normalized(raw)
    }

    fn normalized(raw: Vec<f64>) -> Self {
        let total: f64 = raw.iter().sum();
        Self {
            masses: raw.into_iter().map(|m| m / total).collect(),
        }
    }

    pub fn support_size(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `a·self + (1−a)·other`.
    pub fn mix(&self, other: &Self, a: f64) -> Self {
        Self {
            masses: self
                .masses
                .iter()
                .zip(&other.masses)
                .map(|(p, q)| a * p + (1.0 - a) * q)
                .collect(),
        }
    }

    /// The product distribution, outcomes in row-major order.
    pub fn product(&self, other: &Self) -> Self {
        Self {
            masses: self
                .masses
                .iter()
                .flat_map(|p| other.masses.iter().map(move |q| p * q))
                .collect(),
        }
    }
}

fn same_support(mu: &FiniteDistribution, nu: &FiniteDistribution) -> Result<()> {
    if mu.support_size() != nu.support_size() {
        return domain("distributions over different supports");
    }
    Ok(())
}

fn ln_factorials(m: u64) -> Vec<f64> {
    let mut out = vec![0.0; m as usize + 1];
    for i in 1..=m as usize {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

/// `Bin(m, p)` pmf, evaluated in log space.
fn binomial_pmf(m: u64, p: f64) -> Vec<f64> {
    let lf = ln_factorials(m);
    let m_us = m as usize;
    (0..=m_us)
        .map(|t| {
            let (succ, fail) = (t as f64, (m_us - t) as f64);
            if (p == 0.0 && t > 0) || (p == 1.0 && t < m_us) {
                return 0.0;
            }
            let ln_p = if succ > 0.0 { succ * p.ln() } else { 0.0 };
            let ln_q = if fail > 0.0 { fail * (-p).ln_1p() } else { 0.0 };
            (lf[m_us] - lf[t] - lf[m_us - t] + ln_p + ln_q).exp()
        })
        .collect()
}

/// `E_{t∼Bin(m,p)}[D_KL(t/m, p)]` in bits, `1 ≤ m ≤ 64`.
pub fn expected_binomial_kl(m: u64, p: f64) -> Result<f64> {
    if m == 0 || m > MAX_BINOMIAL_M {
        return domain(format!("m must lie in 1..={MAX_BINOMIAL_M}, got {m}"));
    }
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("p must lie in [0, 1], got {p}"));
    }
    Ok(binomial_pmf(m, p)
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(t, &w)| w * bernoulli_kl(t as f64 / m as f64, p))
        .sum())
}

/// Worst point of `m·E[D_KL(t/m, p)]` over a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinomialGridReport {
    pub max_scaled: f64,
    pub argmax_m: u64,
    pub argmax_p: f64,
    pub points: usize,
    pub violations: usize,
}

/// Sweeps `m ∈ 1..=max_m` and `p = j/steps`.
pub fn binomial_kl_grid(max_m: u64, steps: u32) -> Result<BinomialGridReport> {
    let mut report = BinomialGridReport {
        max_scaled: f64::NEG_INFINITY,
        argmax_m: 0,
        argmax_p: 0.0,
        points: 0,
        violations: 0,
    };
    for m in 1..=max_m {
        for j in 0..=steps {
            let p = j as f64 / steps as f64;
            let scaled = m as f64 * expected_binomial_kl(m, p)?;
            report.points += 1;
            if scaled > 1.0 + SLACK * m as f64 {
                report.violations += 1;
            }
            if scaled > report.max_scaled {
                report.max_scaled = scaled;
                report.argmax_m = m;
                report.argmax_p = p;
            }
        }
    }
    Ok(report)
}

/// `D_KL(μ‖ν) ≤ t²/ln 2` when `μ(x) ∈ (1 ± t)ν(x)` pointwise, `t ≤ 1/4`.
pub fn check_bounded_ratio_dkl(mu: &FiniteDistribution, nu: &FiniteDistribution, t: f64) -> Result<bool> {
    same_support(mu, nu)?;
    if !(0.0..=0.25).contains(&t) {
        return Err(Error::Precondition(format!("t = {t} outside [0, 1/4]")));
    }
    for (&p, &q) in mu.masses.iter().zip(&nu.masses) {
        if (p - q).abs() > (t + 4.0 * f64::EPSILON) * q {
            return Err(Error::Precondition(format!("{p} is not within (1 ± {t})·{q}")));
        }
    }
    Ok(kl_bits(&mu.masses, &nu.masses) <= t * t / LN_2 + SLACK)
}

/// `Σ (μ−ν)²/(μ+ν) ≤ (D_KL(μ‖ν) + D_KL(ν‖μ))·ln 2`.
pub fn check_symmetric_chi_square(mu: &FiniteDistribution, nu: &FiniteDistribution) -> Result<bool> {
    same_support(mu, nu)?;
    let lhs: f64 = mu
        .masses
        .iter()
        .zip(&nu.masses)
        .filter(|(p, q)| **p + **q > 0.0)
        .map(|(p, q)| (p - q) * (p - q) / (p + q))
        .sum();
    let rhs = (kl_bits(&mu.masses, &nu.masses) + kl_bits(&nu.masses, &mu.masses)) * LN_2;
    Ok(lhs <= rhs + SLACK)
}

/// `D_KL(½μ + ½ν ‖ (1+r)/2·μ + (1−r)/2·ν) ≤ ½r²(D_KL(μ‖ν) + D_KL(ν‖μ))`
/// for `|r| < 1/2`.
pub fn check_half_mixture_bias(mu: &FiniteDistribution, nu: &FiniteDistribution, r: f64) -> Result<bool> {
    same_support(mu, nu)?;
    if !(r.abs() < 0.5) {
        return Err(Error::Precondition(format!("|r| = {} is not below 1/2", r.abs())));
    }
    let even = mu.mix(nu, 0.5);
    let biased = mu.mix(nu, (1.0 + r) / 2.0);
    let lhs = kl_bits(&even.masses, &biased.masses);
    let rhs = 0.5 * r * r * (kl_bits(&mu.masses, &nu.masses) + kl_bits(&nu.masses, &mu.masses));
    Ok(lhs <= rhs + SLACK)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunKlCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Per-index run distributions: the count of 1 bits among `m` draws of an
/// index whose parameter is `(1−δ)/2` with probability `low_weight`, else
/// `(1+δ)/2`.
fn run_count_distribution(m: u64, delta: f64, low_weight: f64) -> FiniteDistribution {
    let low = binomial_pmf(m, (1.0 - delta) / 2.0);
    let high = binomial_pmf(m, (1.0 + delta) / 2.0);
    FiniteDistribution {
        masses: low
            .iter()
            .zip(&high)
            .map(|(a, b)| low_weight * a + (1.0 - low_weight) * b)
            .collect(),
    }
}

/// Exact KL between the run distributions of a non-adaptive algorithm drawing
/// `m_i` samples from index `i`, under the balanced and the `r`-biased
/// inputs, against `5r²δ²·Σm_i`.
pub fn check_nonadaptive_run_kl(counts: &[u64], delta: f64, r: f64) -> Result<RunKlCheck> {
    if !(0.0..1.0 / 3.0).contains(&delta) {
        return Err(Error::Precondition(format!("delta = {delta} outside [0, 1/3)")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Precondition(format!("r = {r} outside [0, 1)")));
    }
    if let Some(&m) = counts.iter().find(|&&m| m > MAX_RUN_COUNT) {
        return Err(Error::Capability {
            what: "per-index sample count",
            got: m as usize,
            limit: MAX_RUN_COUNT as usize,
        });
    }
    let lhs: f64 = counts
        .iter()
        .filter(|&&m| m > 0)
        .map(|&m| {
            let balanced = run_count_distribution(m, delta, 0.5);
            let biased = run_count_distribution(m, delta, (1.0 + r) / 2.0);
            kl_bits(&balanced.masses, &biased.masses)
        })
        .sum();
    let q: u64 = counts.iter().sum();
    let rhs = 5.0 * r * r * delta * delta * q as f64;
    Ok(RunKlCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + SLACK,
    })
}

/// `D_KL(μ‖ν)·ln 2 ≥ 2·d_TV(μ, ν)²`.
pub fn check_pinsker(mu: &FiniteDistribution, nu: &FiniteDistribution) -> Result<bool> {
    same_support(mu, nu)?;
    let tv = total_variation(&mu.masses, &nu.masses);
    Ok(kl_bits(&mu.masses, &nu.masses) * LN_2 >= 2.0 * tv * tv - SLACK)
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// `D_KL(μ1×μ2 ‖ ν1×ν2) = D_KL(μ1‖ν1) + D_KL(μ2‖ν2)`.
pub fn check_product_additivity(
    mu1: &FiniteDistribution,
    mu2: &FiniteDistribution,
    nu1: &FiniteDistribution,
    nu2: &FiniteDistribution,
) -> Result<bool> {
    same_support(mu1, nu1)?;
    same_support(mu2, nu2)?;
    let joint = kl_bits(&mu1.product(mu2).masses, &nu1.product(nu2).masses);
    let split = kl_bits(&mu1.masses, &nu1.masses) + kl_bits(&mu2.masses, &nu2.masses);
    Ok(close(joint, split))
}

/// `D_KL(a‖b) = Σ_i E_{w∼a, |w|=i}[D_KL(a(1|w), b(1|w))]`.
pub fn check_chain_rule(a: &MarginalTree, b: &MarginalTree) -> Result<bool> {
    Ok(close(kl_divergence(a, b)?, kl_by_levels(a, b)?))
}

/// Outcome of one randomized sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaResult {
    pub name: &'static str,
    pub instances: usize,
    pub violations: usize,
    pub passed: bool,
}

/// `ν` random, `μ = ν·(1 + u·t)` renormalized with `|u| ≤ 1`. Returns the
/// pair and the smallest `t` for which the ratio condition holds.
pub fn random_ratio_pair<R: Rng + ?Sized>(k: usize, t: f64, rng: &mut R) -> (FiniteDistribution, FiniteDistribution, f64) {
    let nu = FiniteDistribution::random(k, rng);
    let mu = FiniteDistribution::normalized(
        nu.masses
            .iter()
            .map(|q| q * (1.0 + rng.random_range(-1.0..=1.0) * t))
            .collect(),
    );
    let t_eff = mu
        .masses
        .iter()
        .zip(&nu.masses)
        .map(|(p, q)| (p - q).abs() / q)
        .fold(0.0, f64::max);
    (mu, nu, t_eff)
}

fn sweep(
    name: &'static str,
    instances: usize,
    seed: u64,
    check: impl Fn(&mut RandomStream) -> Result<bool> + Sync,
) -> Result<LemmaResult> {
    let key = name.bytes().fold(seed, |h, b| mix(h ^ b as u64));
    let outcomes: Vec<bool> = (0..instances)
        .into_par_iter()
        .map(|i| check(&mut RandomStream::for_index(key, tags::INSTANCE, i as u64)))
        .collect::<Result<_>>()?;
    let violations = outcomes.iter().filter(|ok| !**ok).count();
    Ok(LemmaResult {
        name,
        instances,
        violations,
        passed: violations == 0,
    })
}

fn support<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(2..=16)
}

/// Runs every checker on `instances` seeded random inputs each, plus the
/// binomial grid.
pub fn verify_lemmas(instances: usize, seed: u64) -> Result<Vec<LemmaResult>> {
    let mut out = Vec::new();
    let grid = binomial_kl_grid(MAX_BINOMIAL_M, 100)?;
    out.push(LemmaResult {
        name: "expected_binomial_kl",
        instances: grid.points,
        violations: grid.violations,
        passed: grid.violations == 0,
    });
    out.push(sweep("bounded_ratio_dkl", instances, seed, |rng| {
        let k = support(rng);
        let t = rng.random_range(0.0..=0.1);
        let (mu, nu, t_eff) = random_ratio_pair(k, t, rng);
        check_bounded_ratio_dkl(&mu, &nu, t_eff)
    })?);
    out.push(sweep("symmetric_chi_square", instances, seed, |rng| {
        let k = support(rng);
        check_symmetric_chi_square(&FiniteDistribution::random(k, rng), &FiniteDistribution::random(k, rng))
    })?);
    out.push(sweep("half_mixture_bias", instances, seed, |rng| {
        let k = support(rng);
        let (mu, nu) = (FiniteDistribution::random(k, rng), FiniteDistribution::random(k, rng));
        let r = rng.random_range(-0.4999..0.4999);
        check_half_mixture_bias(&mu, &nu, r)
    })?);
    out.push(sweep("nonadaptive_run_kl", instances, seed, |rng| {
        let counts: Vec<u64> = (0..rng.random_range(1..=6))
            .map(|_| rng.random_range(1..=MAX_RUN_COUNT))
            .collect();
        let delta = rng.random_range(0.0..1.0 / 3.0);
        let r = rng.random_range(0.0..0.5);
        Ok(check_nonadaptive_run_kl(&counts, delta, r)?.holds)
    })?);
    out.push(sweep("pinsker", instances, seed, |rng| {
        let k = support(rng);
        check_pinsker(&FiniteDistribution::random(k, rng), &FiniteDistribution::random(k, rng))
    })?);
    out.push(sweep("product_additivity", instances, seed, |rng| {
        let (k1, k2) = (rng.random_range(2..=6), rng.random_range(2..=6));
        let mu1 = FiniteDistribution::random(k1, rng);
        let mu2 = FiniteDistribution::random(k2, rng);
        let nu1 = FiniteDistribution::random(k1, rng);
        let nu2 = FiniteDistribution::random(k2, rng);
        check_product_additivity(&mu1, &mu2, &nu1, &nu2)
    })?);
    out.push(sweep("chain_rule", instances, seed, |rng| {
        let n = rng.random_range(1..=8);
        let a = MarginalTree::random(n, 0.01, 0.99, rng)?;
        let b = MarginalTree::random(n, 0.01, 0.99, rng)?;
        check_chain_rule(&a, &b)
    })?);
    Ok(out)
}
