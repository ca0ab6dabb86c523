use super::{renyi_order, unit_delta, PrivacyError};
use crate::model::ExtReal;

/// Sequential composition of (ε, δ) costs against a global δ: the summed ε,
/// or ∞ once the summed δ exceeds `delta_global`.
pub fn sequential_ed(calls: &[(f64, f64)], delta_global: f64) -> ExtReal {
    let (eps, delta) = calls
        .iter()
        .fold((0.0, 0.0), |(e, d), (ei, di)| (e + ei, d + di));
    if delta > delta_global {
        ExtReal::INFINITY
    } else {
        ExtReal::abs_of(eps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterDecision {
    Continue,
    Halt,
}

/// Whether a filter with `budget` that has already spent `spent` may accept
/// `proposed`.
pub fn filter_check(spent: (f64, f64), proposed: (f64, f64), budget: (f64, f64)) -> FilterDecision {
    let eps = spent.0 + proposed.0;
    let delta = spent.1 + proposed.1;
    if delta > budget.1 || eps > budget.0 {
        FilterDecision::Halt
    } else {
        FilterDecision::Continue
    }
}

/// Converts a Rényi cost `(alpha, eps_r)` to (ε, δ)-differential privacy.
pub fn renyi_to_ed(alpha: f64, eps_r: f64, delta: f64) -> Result<(f64, f64), PrivacyError> {
    let alpha = renyi_order(alpha)?;
    let delta = unit_delta(delta)?;
    Ok((eps_r + (1.0 / delta).ln() / (alpha - 1.0), delta))
}

/// Advanced composition of `k` identical (ε, δ) calls with slack δ':
/// `ε·sqrt(2k·ln(1/δ')) + k·ε·(e^ε − 1)` and `k·δ + δ'`.
pub fn advanced_ed(calls: &[(f64, f64)], delta_slack: f64) -> Result<(f64, f64), PrivacyError> {
    if !(delta_slack > 0.0 && delta_slack < 1.0) {
        return Err(PrivacyError::InvalidParameter { name: "delta_slack", value: delta_slack });
    }
    let Some(&(eps, delta)) = calls.first() else {
        return Ok((0.0, delta_slack));
    };
    if calls.iter().any(|c| *c != (eps, delta)) {
        return Err(PrivacyError::HeterogeneousCosts);
    }
    Ok(advanced_homogeneous(calls.len() as f64, eps, delta, delta_slack))
}

pub(super) fn advanced_homogeneous(k: f64, eps: f64, delta: f64, delta_slack: f64) -> (f64, f64) {
    let eps_total = eps * (2.0 * k * (1.0 / delta_slack).ln()).sqrt() + k * eps * eps.exp_m1();
    (eps_total, k * delta + delta_slack)
}
