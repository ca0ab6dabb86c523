use std::fmt;

/// Privacy cost of one mechanism invocation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cost {
    /// Pure ε-differential privacy.
    Pure(f64),
    /// Approximate (ε, δ)-differential privacy.
    Approx { eps: f64, delta: f64 },
    /// Rényi differential privacy of order α.
    Renyi { alpha: f64, eps: f64 },
}

impl Cost {
    pub fn regime(&self) -> &'static str {
        match self {
            Cost::Pure(_) => "pure",
            Cost::Approx { .. } => "approx",
            Cost::Renyi { .. } => "renyi",
        }
    }

    /// The cost as an (ε, δ) pair, when it is one.
    pub fn as_ed(&self) -> Option<(f64, f64)> {
        match *self {
            Cost::Pure(eps) => Some((eps, 0.0)),
            Cost::Approx { eps, delta } => Some((eps, delta)),
            Cost::Renyi { .. } => None,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Pure(eps) => write!(f, "ε={eps:?}"),
            Cost::Approx { eps, delta } => write!(f, "(ε,δ)=({eps:?}, {delta:?})"),
            Cost::Renyi { alpha, eps } => write!(f, "(α,ε)=({alpha:?}, {eps:?})"),
        }
    }
}
