use std::fmt;
use std::ops::{Add, Mul, Neg};

use super::SensError;
use crate::model::{ExtReal, Metric, SensEnv, SourceId};

/// A real number with the sensitivity environment and metric of the data it
/// was computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct SensScalar {
    pub value: f64,
    pub senv: SensEnv,
    pub metric: Metric,
    l2: bool,
}

impl SensScalar {
    pub fn new(value: f64, senv: SensEnv, metric: Metric) -> SensScalar {
        SensScalar { value, senv, metric, l2: false }
    }

    /// A value read from `source`, 1-sensitive in it.
    pub fn lift(value: f64, source: SourceId, metric: Metric) -> SensScalar {
        SensScalar::new(value, SensEnv::singleton(source, ExtReal::ONE), metric)
    }

    /// A public constant. Its metric is `Bot`, so adding it to a value keeps
    /// that value's metric.
    pub fn constant(value: f64) -> SensScalar {
        SensScalar::new(value, SensEnv::zero(), Metric::Bot)
    }

    /// True if the sensitivity was calibrated under the L2 norm of a vector,
    /// which only the Gaussian mechanisms accept.
    pub fn is_l2_calibrated(&self) -> bool {
        self.l2
    }

    pub(crate) fn with_l2_calibration(mut self) -> SensScalar {
        self.l2 = true;
        self
    }

    pub fn is_sensitive(&self) -> bool {
        !self.senv.is_zero()
    }
}

impl fmt::Display for SensScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}#{}", self.value, self.senv, self.metric)
    }
}

pub fn s_add(a: &SensScalar, b: &SensScalar) -> SensScalar {
    SensScalar {
        value: a.value + b.value,
        senv: a.senv.add(&b.senv),
        metric: a.metric.join(b.metric),
        l2: a.l2 || b.l2,
    }
}

/// Product. With a non-sensitive side this is the core scaling rule; with
/// two sensitive sides every source involved becomes infinitely sensitive.
pub fn s_mul(a: &SensScalar, b: &SensScalar) -> SensScalar {
    let value = a.value * b.value;
    let (senv, metric) = if a.senv.is_zero() {
        (b.senv.scale(ExtReal::abs_of(a.value)), b.metric)
    } else if b.senv.is_zero() {
        (a.senv.scale(ExtReal::abs_of(b.value)), a.metric)
    } else {
        (a.senv.add(&b.senv).saturate(), a.metric.join(b.metric))
    };
    SensScalar { value, senv, metric, l2: a.l2 || b.l2 }
}

/// Branch decision on `guard == 0`; only allowed for non-sensitive guards.
pub fn s_if0(guard: &SensScalar) -> Result<bool, SensError> {
    if guard.is_sensitive() {
        return Err(SensError::SensitiveGuard { senv: guard.senv.clone() });
    }
    Ok(guard.value == 0.0)
}

impl Add for &SensScalar {
    type Output = SensScalar;

    fn add(self, rhs: &SensScalar) -> SensScalar {
        s_add(self, rhs)
    }
}

impl Add for SensScalar {
    type Output = SensScalar;

    fn add(self, rhs: SensScalar) -> SensScalar {
        s_add(&self, &rhs)
    }
}

impl Mul for &SensScalar {
    type Output = SensScalar;

    fn mul(self, rhs: &SensScalar) -> SensScalar {
        s_mul(self, rhs)
    }
}

impl Mul for SensScalar {
    type Output = SensScalar;

    fn mul(self, rhs: SensScalar) -> SensScalar {
        s_mul(&self, &rhs)
    }
}

impl Neg for SensScalar {
    type Output = SensScalar;

    fn neg(mut self) -> SensScalar {
        self.value = -self.value;
        self
    }
}
