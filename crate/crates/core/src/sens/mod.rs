//! Sensitivity-tagged host values: scalars, vectors and row tables.
//!
//! This is the layer a DP program author works with directly. Arithmetic on
//! these values updates sensitivity environments the same way the core
//! evaluator does, except that multiplying two sensitive values saturates to
//! infinite sensitivity instead of failing.

mod rows;
mod scalar;
mod vector;

use std::fmt;

use crate::model::{Metric, SensEnv};

pub use rows::SensRows;
pub use scalar::{s_add, s_if0, s_mul, SensScalar};
pub use vector::{clip_l1, clip_l2, s_map, vec_sum, SensVector};

/// Distance metric on vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VecMetric {
    L1(Metric),
    L2(Metric),
    /// Elementwise: every element moves by at most the tagged sensitivity.
    LInf,
}

impl fmt::Display for VecMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VecMetric::L1(m) => write!(f, "L1({m})"),
            VecMetric::L2(m) => write!(f, "L2({m})"),
            VecMetric::LInf => f.write_str("LInf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SensError {
    #[error("clipping bound must be positive and finite, got {0}")]
    NonPositiveBound(f64),
    #[error("operation requires a {expected} vector, got {got}")]
    IncompatibleMetric { expected: &'static str, got: VecMetric },
    #[error("cannot sum an unclipped vector: its sensitivity is unbounded")]
    UnboundedSum,
    #[error("conditional guard depends on sensitive data {senv}")]
    SensitiveGuard { senv: SensEnv },
    #[error("mapped function returned a value tagged with another map's probe")]
    ProbeEscape,
    #[error("mapped function returned a value under metric {0}, expected diff")]
    MapMetric(Metric),
}
