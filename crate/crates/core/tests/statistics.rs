//! Goodness-of-fit checks on the samplers, at the 1% level.

use rand::{Rng, RngCore};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use prefixsim::adhoc::{gen_instance, test_ad_hoc, tester_rate, tester_width};
use prefixsim::bits::{BitString, Prefix};
use prefixsim::divergence::{kl_divergence, tv_distance};
use prefixsim::oracle::{ConditionalSampler, ExplicitDistribution, PrefixOracle};
use prefixsim::rng::RandomStream;
use prefixsim::simulation::{init_simulation, preprocess};
use prefixsim::tree::MarginalTree;

const DRAWS: usize = 100_000;

/// Pearson statistic against `expected` probabilities, cells with zero
/// expectation required to stay empty. Returns whether it is below the 99%
/// quantile.
fn chi_square_fits(counts: &[u64], expected: &[f64]) -> bool {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &p) in counts.iter().zip(expected) {
        if p == 0.0 {
            if c > 0 {
                return false;
            }
            continue;
        }
        let e = p * total as f64;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return true;
    }
    let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.99);
    stat <= critical
}

fn tally(n: usize, mut draw: impl FnMut() -> BitString) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << n];
    for _ in 0..DRAWS {
        counts[draw().index()] += 1;
    }
    counts
}

fn exact_masses(t: &MarginalTree) -> Vec<f64> {
    (0..1usize << t.n())
        .map(|i| t.mass(&BitString::from_index(t.n(), i)).unwrap())
        .collect()
}

#[test]
fn tree_sampler_matches_masses() {
    let mut rng = RandomStream::from_seed(101);
    let mut tree = MarginalTree::random(4, 0.1, 0.9, &mut rng).unwrap();
    let expected = exact_masses(&tree);
    let counts = tally(4, || tree.sample_extension(&Prefix::empty(), &mut rng));
    assert!(chi_square_fits(&counts, &expected));
}

#[test]
fn conditional_draws_match_cylinder_masses() {
    let mut rng = RandomStream::from_seed(102);
    let tree = MarginalTree::random(5, 0.1, 0.9, &mut rng).unwrap();
    let masses = exact_masses(&tree);
    let w = Prefix::from_bits(vec![true, false]);
    let (lo, hi) = w.cylinder_range(5);
    let total: f64 = masses[lo..=hi].iter().sum();
    let expected: Vec<f64> = (0..32)
        .map(|i| if (lo..=hi).contains(&i) { masses[i] / total } else { 0.0 })
        .collect();
    let mut oracle = PrefixOracle::new(tree);
    let counts = tally(5, || oracle.prefix_conditional_sample(&w, &mut rng));
    assert!(chi_square_fits(&counts, &expected));
    assert_eq!(oracle.budget().conditional_calls, DRAWS as u64);
}

#[test]
fn explicit_sampler_matches_masses() {
    let mut rng = RandomStream::from_seed(103);
    let raw: Vec<f64> = (0..16).map(|i| if i % 5 == 0 { 0.0 } else { rng.random::<f64>() }).collect();
    let total: f64 = raw.iter().sum();
    let masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
    let mut dist = ExplicitDistribution::new(4, masses.clone()).unwrap();
    let counts = tally(4, || dist.sample_extension(&Prefix::empty(), &mut rng));
    assert!(chi_square_fits(&counts, &masses));
}

#[test]
fn preprocessed_sampler_matches_learned_masses() {
    let mut rng = RandomStream::from_seed(104);
    let mu = MarginalTree::random(4, 0.2, 0.8, &mut rng).unwrap();
    let ld = preprocess(&mut PrefixOracle::new(mu), 0.25, 5).unwrap();
    let expected: Vec<f64> = (0..16).map(|i| ld.query(&BitString::from_index(4, i)).unwrap()).collect();
    let counts = tally(4, || {
        let (x, p) = ld.sample(&mut rng);
        assert_eq!(p, ld.query(&x).unwrap());
        x
    });
    assert!(chi_square_fits(&counts, &expected));
}

#[test]
fn lazy_sampler_matches_materialized_tree() {
    let mut rng = RandomStream::from_seed(105);
    let mu = MarginalTree::random(5, 0.2, 0.8, &mut rng).unwrap();
    let mut sim = init_simulation(PrefixOracle::new(mu), 0.5, 6).unwrap();
    let counts = tally(5, || sim.sample(&mut rng).0);
    let ld = sim.materialize().unwrap();
    assert!(chi_square_fits(&counts, &exact_masses(ld.tree())));
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn null_instance_indexes_are_exchangeable() {
    let mut rng = RandomStream::from_seed(106);
    let (n, per_index) = (2000, 40);
    let mut inst = gen_instance(n, 0.3, 0.0, &mut rng).unwrap();
    let mut means: Vec<f64> = (1..=n)
        .map(|i| (0..per_index).filter(|_| inst.sample_index(i, &mut rng).unwrap()).count() as f64 / per_index as f64)
        .collect();
    assert_eq!(inst.total_draws(), (n * per_index) as u64);
    let (left, right) = means.split_at_mut(n / 2);
    let d = ks_statistic(left, right);
    let half = (n / 2) as f64;
    assert!(d <= 1.628 * (2.0 / half).sqrt(), "D = {d}");
}

#[test]
fn low_share_follows_bias() {
    let mut rng = RandomStream::from_seed(107);
    let n = 40_000;
    for r in [0.0, 1.0 / 13.0] {
        let inst = gen_instance(n, 0.3, r, &mut rng).unwrap();
        let low = inst.probabilities().iter().filter(|&&p| p < 0.5).count() as f64;
        let p = (1.0 + r) / 2.0;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((low - n as f64 * p).abs() <= 4.0 * sd, "r = {r}");
    }
}

#[test]
fn tester_loop_count_is_poisson() {
    let (delta, r) = (0.3, 1.0 / 13.0);
    let lambda = tester_width(r).unwrap() as f64 * tester_rate(delta).unwrap();
    let mut rng = RandomStream::from_seed(108);
    let counts: Vec<f64> = (0..200)
        .map(|_| {
            let mut inst = gen_instance(2535, delta, 0.0, &mut rng).unwrap();
            let out = test_ad_hoc(&mut inst, delta, r, &mut rng).unwrap();
            assert_eq!(out.loop_count, inst.total_draws());
            out.loop_count as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
    assert!((mean - lambda).abs() <= 4.0 * (lambda / 200.0).sqrt());
    assert!((var / lambda - 1.0).abs() < 0.4);
}

#[test]
fn monte_carlo_kl_mean_within_delta() {
    let delta = 0.25;
    let mut seeds = RandomStream::from_seed(109);
    let kls: Vec<f64> = (0..300)
        .map(|_| {
            let mut rng = RandomStream::from_seed(seeds.next_u64());
            let mu = MarginalTree::random(6, 0.2, 0.8, &mut rng).unwrap();
            let ld = preprocess(&mut PrefixOracle::new(mu.clone()), delta, rng.next_u64()).unwrap();
            kl_divergence(ld.tree(), &mu).unwrap()
        })
        .collect();
    let mean = kls.iter().sum::<f64>() / 300.0;
    let sd = (kls.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / 299.0).sqrt();
    assert!(mean <= delta + 3.0 * sd / 300f64.sqrt(), "mean {mean}");
}

#[test]
fn both_sides_close_with_markov_rate() {
    // KL ≤ 8δ with chance 7/8 per side, then Pinsker bounds the distance
    let delta = 0.1;
    let bound = (8.0 * delta * std::f64::consts::LN_2 / 2.0).sqrt();
    let mut seeds = RandomStream::from_seed(110);
    let trials = 200;
    let good = (0..trials)
        .filter(|_| {
            let mut rng = RandomStream::from_seed(seeds.next_u64());
            (0..2).all(|_| {
                let mu = MarginalTree::random(4, 0.2, 0.8, &mut rng).unwrap();
                let ld = preprocess(&mut PrefixOracle::new(mu.clone()), delta, rng.next_u64()).unwrap();
                tv_distance(ld.tree(), &mu).unwrap() <= bound
            })
        })
        .count();
    assert!(good as f64 / trials as f64 >= 49.0 / 64.0, "{good}/{trials}");
}
