//! Total variation distance estimation from two mass-returning samplers.
//!
//! The estimator draws `x ∼ a` together with `ã(x)`, asks `b` for `b̃(x)`,
//! and averages `max(0, 1 − b̃(x)/ã(x))`. With exact masses this average has
//! expectation `d_TV(a, b)`. `s = ⌈C/ε²⌉` draws per repetition, median of
//! `K` repetitions.
//!
//! [`tv_pipeline`] feeds the estimator with two lazy simulations at accuracy
//! `δ = ε²/36`, which keeps the whole run at `O(n²/ε⁴)` conditional samples.

use std::cell::RefCell;
use std::rc::Rc;

use serde::Serialize;

use crate::bits::{BitString, Prefix};
use crate::error::{domain, Error, Result};
use crate::oracle::{ConditionalSampler, PrefixOracle, SampleBudget};
use crate::rng::{tags, RandomStream};
use crate::simulation::{init_simulation, samples_per_edge, LearnedDistribution, SimulationState};
use crate::tree::MarginalTree;
use crate::util::ceil_snapped;

/// Draws elements together with their mass, and answers mass queries.
pub trait MassOracle {
    fn n(&self) -> usize;

    /// `x ∼ μ̃` together with `μ̃(x)`.
    fn draw(&mut self, rng: &mut RandomStream) -> Result<(BitString, f64)>;

    /// `μ̃(x)`.
    fn mass(&mut self, x: &BitString) -> Result<f64>;
}

impl<S: ConditionalSampler> MassOracle for SimulationState<S> {
    fn n(&self) -> usize {
        SimulationState::n(self)
    }

    fn draw(&mut self, rng: &mut RandomStream) -> Result<(BitString, f64)> {
        Ok(self.sample(rng))
    }

    fn mass(&mut self, x: &BitString) -> Result<f64> {
        self.query(x)
    }
}

impl MassOracle for LearnedDistribution {
    fn n(&self) -> usize {
        LearnedDistribution::n(self)
    }

    fn draw(&mut self, rng: &mut RandomStream) -> Result<(BitString, f64)> {
        Ok(self.sample(rng))
    }

    fn mass(&mut self, x: &BitString) -> Result<f64> {
        self.query(x)
    }
}

/// Exact masses.
impl MassOracle for MarginalTree {
    fn n(&self) -> usize {
        MarginalTree::n(self)
    }

    fn draw(&mut self, rng: &mut RandomStream) -> Result<(BitString, f64)> {
        let x = self.sample_extension(&Prefix::empty(), rng);
        let p = MarginalTree::mass(self, &x)?;
        Ok((x, p))
    }

    fn mass(&mut self, x: &BitString) -> Result<f64> {
        MarginalTree::mass(self, x)
    }
}

/// A mass oracle that can be handed out more than once, e.g. as both sides
/// of an estimate.
#[derive(Debug)]
pub struct Shared<T>(Rc<RefCell<T>>);

impl<T> Shared<T> {
    pub fn new(inner: T) -> Self {
        Self(Rc::new(RefCell::new(inner)))
    }

    pub fn borrow(&self) -> std::cell::Ref<'_, T> {
        self.0.borrow()
    }
}

impl<T> Clone for Shared<T> {
    fn clone(&self) -> Self {
        Self(Rc::clone(&self.0))
    }
}

impl<T: MassOracle> MassOracle for Shared<T> {
    fn n(&self) -> usize {
        self.0.borrow().n()
    }

    fn draw(&mut self, rng: &mut RandomStream) -> Result<(BitString, f64)> {
        self.0.borrow_mut().draw(rng)
    }

    fn mass(&mut self, x: &BitString) -> Result<f64> {
        self.0.borrow_mut().mass(x)
    }
}

/// Estimator constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TvParams {
    /// `s = ⌈C/ε²⌉` draws per repetition.
    pub c: f64,
    /// Number of repetitions whose median is returned.
    pub k: usize,
}

impl Default for TvParams {
    fn default() -> Self {
        Self { c: 16.0, k: 9 }
    }
}

impl TvParams {
    pub fn draws_per_repetition(&self, epsilon: f64) -> u64 {
        ceil_snapped(self.c / (epsilon * epsilon))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TvEstimate {
    pub estimate: f64,
    pub repetitions: Vec<f64>,
    pub draws: u64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return domain(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    Ok(())
}

/// Estimates `d_TV(a, b)` to within `ε`.
pub fn estimate_tv<A: MassOracle, B: MassOracle>(
    a: &mut A,
    b: &mut B,
    epsilon: f64,
    params: &TvParams,
    rng: &mut RandomStream,
) -> Result<TvEstimate> {
    check_epsilon(epsilon)?;
    if params.k == 0 || !(params.c > 0.0) {
        return domain("need C > 0 and K >= 1");
    }
    if a.n() != b.n() {
        return domain("oracles over different lengths");
    }
    let s = params.draws_per_repetition(epsilon);
    let mut repetitions = Vec::with_capacity(params.k);
    for _ in 0..params.k {
        let mut sum = 0.0;
        for _ in 0..s {
            let (x, pa) = a.draw(rng)?;
            if pa <= 0.0 {
                return Err(Error::Inconsistency(format!("drew {x} with zero mass")));
            }
            let pb = b.mass(&x)?;
            sum += (1.0 - pb / pa).max(0.0);
        }
        repetitions.push(sum / s as f64);
    }
    let mut sorted = repetitions.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(TvEstimate {
        estimate: sorted[sorted.len() / 2].clamp(0.0, 1.0),
        repetitions,
        draws: s * params.k as u64,
    })
}

/// Result of a full estimation run against two prefix oracles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineReport {
    pub estimate: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub samples_per_edge: u64,
    pub draws: u64,
    pub budget_a: SampleBudget,
    pub budget_b: SampleBudget,
    pub edges_a: usize,
    pub edges_b: usize,
}

/// `δ = ε²/36`.
pub fn pipeline_delta(epsilon: f64) -> f64 {
    epsilon * epsilon / 36.0
}

/// `2·⌈n/δ⌉·min(2^n − 1, K·s·n)`, the most conditional samples a pipeline
/// run can spend. The ledger hits it exactly once every prefix on both sides
/// has been estimated.
pub fn pipeline_budget(n: usize, epsilon: f64, params: &TvParams) -> Result<u64> {
    check_epsilon(epsilon)?;
    let m = samples_per_edge(n, pipeline_delta(epsilon))?;
    let paths = params.k as u64 * params.draws_per_repetition(epsilon) * n as u64;
    let prefixes = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    Ok(2 * m * prefixes.min(paths))
}

/// Simulates both distributions at `δ = ε²/36` and estimates their distance.
pub fn tv_pipeline<A: ConditionalSampler, B: ConditionalSampler>(
    a: PrefixOracle<A>,
    b: PrefixOracle<B>,
    epsilon: f64,
    params: &TvParams,
    seed: u64,
) -> Result<PipelineReport> {
    check_epsilon(epsilon)?;
    let delta = pipeline_delta(epsilon);
    let mut sim_a = init_simulation(a, delta, crate::rng::mix(seed ^ 0xa))?;
    let mut sim_b = init_simulation(b, delta, crate::rng::mix(seed ^ 0xb))?;
    let mut rng = RandomStream::for_index(seed, tags::USER, 0);
    let est = estimate_tv(&mut sim_a, &mut sim_b, epsilon, params, &mut rng)?;
    Ok(PipelineReport {
        estimate: est.estimate,
        epsilon,
        delta,
        samples_per_edge: sim_a.m(),
        draws: est.draws,
        budget_a: sim_a.budget().clone(),
        budget_b: sim_b.budget().clone(),
        edges_a: sim_a.distinct_pairs(),
        edges_b: sim_b.distinct_pairs(),
    })
}
