//! Differential privacy runtime: noise mechanisms, composition formulas,
//! privacy odometers and privacy filters.
//!
//! Mechanisms take an [`AccountantScope`], which owns the random stream and
//! the stack of active odometers, filters and Rényi blocks. Every charge is
//! validated against the whole stack before anything is recorded, so a
//! refused charge leaves all accounting state unchanged.

mod accountant;
mod composition;
mod cost;
mod mechanisms;
pub mod noise;

use crate::model::{Metric, SourceId};
use crate::sens::SensError;

pub use accountant::{AccountantScope, EdCosts, Filter, FilterKind, LayerHandle, Odometer, OdometerKind, ReportedCost};
pub use composition::{advanced_ed, filter_check, renyi_to_ed, sequential_ed, FilterDecision};
pub use cost::Cost;
pub use mechanisms::{exponential, gauss, gauss_vec, laplace, laplace_vec, renyi_gauss, renyi_gauss_vec, svt};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrivacyError {
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("delta must lie in (0, 1), got {0}")]
    DeltaOutOfRange(f64),
    #[error("value has infinite sensitivity")]
    InfiniteSensitivity,
    #[error("{mechanism} cannot be applied to a value under {metric}")]
    MetricIncompatible { mechanism: &'static str, metric: String },
    #[error("privacy filter halted: {reason}")]
    FilterHalt { reason: String },
    #[error("{accountant} cannot account for a {cost} cost")]
    RegimeMismatch { accountant: &'static str, cost: &'static str },
    #[error("Renyi order mismatch: accountant uses alpha = {expected}, mechanism used {got}")]
    AlphaMismatch { expected: f64, got: f64 },
    #[error("advanced composition needs identical per-call costs")]
    HeterogeneousCosts,
    #[error("no query exceeded the threshold")]
    NoQueryAboveThreshold,
    #[error("query {index} has sensitivity {sensitivity} under {metric}, above the allowed bound")]
    QuerySensitivityViolation { index: usize, sensitivity: String, metric: Metric },
    #[error("no options to choose from")]
    EmptyOptions,
    #[error("layer handle does not name the innermost active {0}")]
    ScopeMismatch(&'static str),
    #[error(transparent)]
    Sens(#[from] SensError),
}

impl PrivacyError {
    pub fn name(&self) -> &'static str {
        match self {
            PrivacyError::InvalidParameter { .. } => "InvalidParameter",
            PrivacyError::DeltaOutOfRange(_) => "DeltaOutOfRange",
            PrivacyError::InfiniteSensitivity => "InfiniteSensitivity",
            PrivacyError::MetricIncompatible { .. } => "MetricIncompatible",
            PrivacyError::FilterHalt { .. } => "FilterHalt",
            PrivacyError::RegimeMismatch { .. } => "RegimeMismatch",
            PrivacyError::AlphaMismatch { .. } => "AlphaMismatch",
            PrivacyError::HeterogeneousCosts => "HeterogeneousCosts",
            PrivacyError::NoQueryAboveThreshold => "NoQueryAboveThreshold",
            PrivacyError::QuerySensitivityViolation { .. } => "QuerySensitivityViolation",
            PrivacyError::EmptyOptions => "EmptyOptions",
            PrivacyError::ScopeMismatch(_) => "ScopeMismatch",
            PrivacyError::Sens(_) => "SensError",
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, PrivacyError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(PrivacyError::InvalidParameter { name, value })
    }
}

fn unit_delta(delta: f64) -> Result<f64, PrivacyError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(delta)
    } else {
        Err(PrivacyError::DeltaOutOfRange(delta))
    }
}

fn renyi_order(alpha: f64) -> Result<f64, PrivacyError> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(alpha)
    } else {
        Err(PrivacyError::InvalidParameter { name: "alpha", value: alpha })
    }
}

/// Sources listed in stable order, used when charging.
fn source_list<'a>(sources: impl Iterator<Item = &'a SourceId>) -> Vec<SourceId> {
    sources.cloned().collect()
}
