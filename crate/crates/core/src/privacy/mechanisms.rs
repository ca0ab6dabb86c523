use rand::Rng;

use super::noise::{sample_gaussian, sample_laplace};
use super::{positive, renyi_order, source_list, unit_delta, AccountantScope, Cost, PrivacyError};
use crate::model::{ExtReal, Metric, SensEnv, SourceId};
use crate::sens::{SensScalar, SensVector, VecMetric};

fn finite(sensitivity: ExtReal) -> Result<f64, PrivacyError> {
    if sensitivity.is_infinite() {
        Err(PrivacyError::InfiniteSensitivity)
    } else {
        Ok(sensitivity.get())
    }
}

fn scalar_gate(mechanism: &'static str, x: &SensScalar, allow_l2: bool) -> Result<f64, PrivacyError> {
    if !x.metric.leq(Metric::Diff) {
        return Err(PrivacyError::MetricIncompatible {
            mechanism,
            metric: x.metric.to_string(),
        });
    }
    if x.is_l2_calibrated() && !allow_l2 {
        return Err(PrivacyError::MetricIncompatible {
            mechanism,
            metric: format!("L2-calibrated {}", x.metric),
        });
    }
    finite(x.senv.max_sensitivity())
}

fn vector_gate(mechanism: &'static str, v: &SensVector, allow_l2: bool) -> Result<f64, PrivacyError> {
    let ok = match v.metric {
        VecMetric::L1(m) => m.leq(Metric::Diff),
        VecMetric::L2(m) => allow_l2 && m.leq(Metric::Diff),
        VecMetric::LInf => false,
    };
    if !ok || v.clip_bound().is_none() {
        return Err(PrivacyError::MetricIncompatible {
            mechanism,
            metric: v.metric.to_string(),
        });
    }
    finite(v.norm_sensitivity())
}

fn sources(senv: &SensEnv) -> Vec<SourceId> {
    source_list(senv.sources())
}

fn gauss_sigma(sensitivity: f64, eps: f64, delta: f64) -> f64 {
    sensitivity * (2.0 * (1.25 / delta).ln()).sqrt() / eps
}

fn renyi_sigma(sensitivity: f64, alpha: f64, eps: f64) -> f64 {
    sensitivity * (alpha / (2.0 * eps)).sqrt()
}

/// Laplace mechanism with scale Δ/ε. Accepts only values whose sensitivity
/// is an absolute difference or L1 bound.
pub fn laplace(scope: &mut AccountantScope, x: &SensScalar, eps: f64) -> Result<f64, PrivacyError> {
    let eps = positive("epsilon", eps)?;
    let sens = scalar_gate("laplace", x, false)?;
    scope.charge(Cost::Pure(eps), &sources(&x.senv))?;
    Ok(x.value + sample_laplace(scope.rng(), sens / eps))
}

/// Gaussian mechanism with σ = Δ·sqrt(2 ln(1.25/δ))/ε.
pub fn gauss(scope: &mut AccountantScope, x: &SensScalar, eps: f64, delta: f64) -> Result<f64, PrivacyError> {
    let eps = positive("epsilon", eps)?;
    let delta = unit_delta(delta)?;
    let sens = scalar_gate("gauss", x, true)?;
    scope.charge(Cost::Approx { eps, delta }, &sources(&x.senv))?;
    Ok(x.value + sample_gaussian(scope.rng(), gauss_sigma(sens, eps, delta)))
}

/// Gaussian mechanism accounted under Rényi DP: σ = Δ·sqrt(α/(2ε)).
pub fn renyi_gauss(scope: &mut AccountantScope, x: &SensScalar, alpha: f64, eps: f64) -> Result<f64, PrivacyError> {
    let alpha = renyi_order(alpha)?;
    let eps = positive("epsilon", eps)?;
    let sens = scalar_gate("renyi_gauss", x, true)?;
    scope.charge(Cost::Renyi { alpha, eps }, &sources(&x.senv))?;
    Ok(x.value + sample_gaussian(scope.rng(), renyi_sigma(sens, alpha, eps)))
}

/// Laplace noise on every coordinate of an L1-clipped vector.
pub fn laplace_vec(scope: &mut AccountantScope, v: &SensVector, eps: f64) -> Result<Vec<f64>, PrivacyError> {
    let eps = positive("epsilon", eps)?;
    let sens = vector_gate("laplace", v, false)?;
    scope.charge(Cost::Pure(eps), &sources(&v.senv))?;
    let rng = scope.rng();
    Ok(v.values.iter().map(|x| x + sample_laplace(rng, sens / eps)).collect())
}

/// Gaussian noise on every coordinate of an L1- or L2-clipped vector.
pub fn gauss_vec(scope: &mut AccountantScope, v: &SensVector, eps: f64, delta: f64) -> Result<Vec<f64>, PrivacyError> {
    let eps = positive("epsilon", eps)?;
    let delta = unit_delta(delta)?;
    let sens = vector_gate("gauss", v, true)?;
    scope.charge(Cost::Approx { eps, delta }, &sources(&v.senv))?;
    let sigma = gauss_sigma(sens, eps, delta);
    let rng = scope.rng();
    Ok(v.values.iter().map(|x| x + sample_gaussian(rng, sigma)).collect())
}

/// Rényi-accounted Gaussian noise on every coordinate of a clipped vector.
pub fn renyi_gauss_vec(
    scope: &mut AccountantScope,
    v: &SensVector,
    alpha: f64,
    eps: f64,
) -> Result<Vec<f64>, PrivacyError> {
    let alpha = renyi_order(alpha)?;
    let eps = positive("epsilon", eps)?;
    let sens = vector_gate("renyi_gauss", v, true)?;
    scope.charge(Cost::Renyi { alpha, eps }, &sources(&v.senv))?;
    let sigma = renyi_sigma(sens, alpha, eps);
    let rng = scope.rng();
    Ok(v.values.iter().map(|x| x + sample_gaussian(rng, sigma)).collect())
}

fn bounded_answers<T>(
    items: &[T],
    bound: f64,
    mut answer: impl FnMut(&T) -> SensScalar,
) -> Result<(Vec<f64>, Vec<SourceId>), PrivacyError> {
    let mut values = Vec::with_capacity(items.len());
    let mut union = SensEnv::zero();
    for (index, item) in items.iter().enumerate() {
        let a = answer(item);
        let sens = a.senv.max_sensitivity();
        if !a.metric.leq(Metric::Diff) || a.is_l2_calibrated() || sens > ExtReal::abs_of(bound) {
            return Err(PrivacyError::QuerySensitivityViolation {
                index,
                sensitivity: sens.to_string(),
                metric: a.metric,
            });
        }
        union = union.join_max(&a.senv);
        values.push(a.value);
    }
    Ok((values, sources(&union)))
}

/// Sparse vector technique (AboveThreshold): the index of the first query
/// whose noisy answer reaches the noisy threshold. Each query must be at most
/// 1-sensitive. Costs ε once, however many queries are inspected.
pub fn svt<D, Q>(
    scope: &mut AccountantScope,
    queries: &[Q],
    data: &D,
    threshold: f64,
    eps: f64,
) -> Result<usize, PrivacyError>
where
    Q: Fn(&D) -> SensScalar,
{
    let eps = positive("epsilon", eps)?;
    let (answers, charged) = bounded_answers(queries, 1.0, |q| q(data))?;
    scope.charge(Cost::Pure(eps), &charged)?;
    let rng = scope.rng();
    let noisy_threshold = threshold + sample_laplace(rng, 2.0 / eps);
    answers
        .iter()
        .position(|a| a + sample_laplace(rng, 4.0 / eps) >= noisy_threshold)
        .ok_or(PrivacyError::NoQueryAboveThreshold)
}

/// Exponential mechanism: picks an option with probability proportional to
/// `exp(ε·score/(2·sensitivity))`. Scores must not exceed the stated
/// sensitivity.
pub fn exponential<'a, D, T>(
    scope: &mut AccountantScope,
    options: &'a [T],
    score: impl Fn(&D, &T) -> SensScalar,
    data: &D,
    eps: f64,
    sensitivity: f64,
) -> Result<&'a T, PrivacyError> {
    let eps = positive("epsilon", eps)?;
    let sensitivity = positive("sensitivity", sensitivity)?;
    if options.is_empty() {
        return Err(PrivacyError::EmptyOptions);
    }
    let (scores, charged) = bounded_answers(options, sensitivity, |o| score(data, o))?;
    if let Some(bad) = scores.iter().find(|s| s.is_nan() || **s == f64::INFINITY) {
        return Err(PrivacyError::InvalidParameter { name: "score", value: *bad });
    }
    scope.charge(Cost::Pure(eps), &charged)?;
    let logits: Vec<f64> = scores.iter().map(|s| eps * s / (2.0 * sensitivity)).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = if top == f64::NEG_INFINITY {
        vec![1.0; logits.len()]
    } else {
        logits.iter().map(|l| (l - top).exp()).collect()
    };
    let total: f64 = weights.iter().sum();
    let mut u = scope.rng().gen::<f64>() * total;
    for (option, w) in options.iter().zip(&weights) {
        if u < *w {
            return Ok(option);
        }
        u -= w;
    }
    let last = weights.iter().rposition(|w| *w > 0.0).expect("the top option has weight 1");
    Ok(&options[last])
}
