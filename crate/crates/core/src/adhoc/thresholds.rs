//! Mass thresholds separating the two hard-instance cases.
//!
//! `k_H = n/2 − √3·√n`, `k_L = n/2 − √6·√n`, and
//! `p = 2^−n (1+δ)^k (1−δ)^(n−k)` at `k ∈ {k_H, k_L}` with `δ = √2·ε/√n`.
//! Everything is kept in natural-log space.

use serde::Serialize;

use crate::error::{domain, Result};

/// `ln Φ(−2√3)`.
pub const LN_PHI_NEG_TWO_SQRT3: f64 = -8.232;
/// `ln Φ(−4.9)`.
pub const LN_PHI_NEG_4_9: f64 = -14.5512;
/// Exponent the tilt ratio `μ′(x)/μ(x)` clears on low-mass elements for
/// `n ≥ 3·10^10`.
pub const TILT_EXPONENT: f64 = 7.19;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdConstants {
    pub n: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub k_h: f64,
    pub k_l: f64,
    pub ln_p_h: f64,
    pub ln_p_l: f64,
}

pub fn threshold_constants(n: f64, epsilon: f64) -> Result<ThresholdConstants> {
    if !(n >= 1.0 && n.is_finite()) {
        return domain(format!("n must be at least 1, got {n}"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return domain(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let root = n.sqrt();
    let delta = 2f64.sqrt() * epsilon / root;
    let k_h = 0.5 * n - 3f64.sqrt() * root;
    let k_l = 0.5 * n - 6f64.sqrt() * root;
    let ln_p = |k: f64| -n * std::f64::consts::LN_2 + k * delta.ln_1p() + (n - k) * (-delta).ln_1p();
    Ok(ThresholdConstants {
        n,
        epsilon,
        delta,
        k_h,
        k_l,
        ln_p_h: ln_p(k_h),
        ln_p_l: ln_p(k_l),
    })
}

impl ThresholdConstants {
    /// `ln((1−ε)p_H) − ln((1+ε)p_L)`, computed from the difference
    /// `(k_H − k_L)·ln((1+δ)/(1−δ))` rather than from the two large logs.
    pub fn gap(&self) -> f64 {
        (self.k_h - self.k_l) * (self.delta.ln_1p() - (-self.delta).ln_1p())
            - (self.epsilon.ln_1p() - (-self.epsilon).ln_1p())
    }
}

/// Whether `(1−ε)p_H > (1+ε)p_L`.
pub fn check_gap(n: f64, epsilon: f64) -> Result<bool> {
    Ok(threshold_constants(n, epsilon)?.gap() > 0.0)
}

/// `ln((1 − 64/n)^(n/2) · e^(16√6/(1 + 8/√n)))`.
pub fn tilt_log_ratio(n: f64) -> Result<f64> {
    if !(n > 64.0) {
        return domain(format!("need n > 64, got {n}"));
    }
    Ok(0.5 * n * (-64.0 / n).ln_1p() + 16.0 * 6f64.sqrt() / (1.0 + 8.0 / n.sqrt()))
}
