use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

/// A non-negative real number or positive infinity.
///
/// Sensitivities and distance bounds live here. The representation is an
/// `f64` that is never negative and never NaN; `f64::INFINITY` stands for ∞.
/// Multiplication follows the `0 · ∞ = 0` convention so that scaling by a
/// zero constant removes all sensitivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal(0.0);
    pub const ONE: ExtReal = ExtReal(1.0);
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);

    /// Returns `None` for negative or NaN inputs.
    pub fn new(value: f64) -> Option<ExtReal> {
        if value.is_nan() || value < 0.0 {
            None
        } else {
            // normalise -0.0
            Some(ExtReal(value + 0.0))
        }
    }

    /// The magnitude of an arbitrary real, used when a signed scalar scales
    /// a sensitivity. NaN maps to ∞.
    pub fn abs_of(value: f64) -> ExtReal {
        if value.is_nan() {
            ExtReal::INFINITY
        } else {
            ExtReal(value.abs())
        }
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// The underlying float; `f64::INFINITY` for ∞.
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Default for ExtReal {
    fn default() -> Self {
        ExtReal::ZERO
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        ExtReal(self.0 + rhs.0)
    }
}

impl Mul for ExtReal {
    type Output = ExtReal;

    fn mul(self, rhs: ExtReal) -> ExtReal {
        if self.is_zero() || rhs.is_zero() {
            ExtReal::ZERO
        } else {
            ExtReal(self.0 * rhs.0)
        }
    }
}

impl std::iter::Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> ExtReal {
        iter.fold(ExtReal::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}
