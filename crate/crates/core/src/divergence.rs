//! Exact divergences. KL divergence is measured in bits throughout.

use crate::error::{domain, Result};
use crate::tree::{visit_pair, MarginalTree};

/// `D_KL(Ber(p) ‖ Ber(q))` in bits, with `0 · log(0/·) = 0`. Infinite when
/// `q ∈ {0, 1}` puts zero mass where `p` does not.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    kl_term(p, q) + kl_term(1.0 - p, 1.0 - q)
}

/// `a · log2(a / b)` with the usual conventions.
pub(crate) fn kl_term(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        a * (a.ln() - b.ln()) / std::f64::consts::LN_2
    }
}

/// `D_KL(p ‖ q)` in bits for mass vectors over the same support.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "support sizes differ");
    p.iter().zip(q).map(|(&a, &b)| kl_term(a, b)).sum()
}

/// `½ Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "support sizes differ");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Exact total variation distance by enumeration (`n ≤ 24`).
pub fn tv_distance(a: &MarginalTree, b: &MarginalTree) -> Result<f64> {
    let mut sum = 0.0;
    visit_pair(a, b, |pa, pb| sum += (pa - pb).abs())?;
    Ok((0.5 * sum).clamp(0.0, 1.0))
}

/// Exact `D_KL(a ‖ b)` in bits by enumeration (`n ≤ 24`).
pub fn kl_divergence(a: &MarginalTree, b: &MarginalTree) -> Result<f64> {
    let mut sum = 0.0;
    visit_pair(a, b, |pa, pb| sum += kl_term(pa, pb))?;
    Ok(sum.max(0.0))
}

/// `Σ_i E_{w ∼ a, |w| = i}[D_KL(a(1|w), b(1|w))]`, the level-by-level form
/// of the KL divergence between two marginal trees.
pub fn kl_by_levels(a: &MarginalTree, b: &MarginalTree) -> Result<f64> {
    if a.n() != b.n() {
        return domain("trees over different lengths");
    }
    if a.n() > crate::tree::MAX_TABLE_N {
        return Err(crate::error::Error::Capability {
            what: "enumeration length n",
            got: a.n(),
            limit: crate::tree::MAX_TABLE_N,
        });
    }
    let mut total = 0.0;
    for w in crate::bits::Prefix::all(a.n()) {
        let reach = a.conditional_mass(&w)?;
        if reach > 0.0 {
            total += reach * bernoulli_kl(a.marginal(&w), b.marginal(&w));
        }
    }
    Ok(total)
}
