use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExtReal;

/// Distance metric on base values.
///
/// `Diff` is absolute difference and `Disc` the discrete metric. `Bot` and
/// `Top` complete the four-point lattice `Bot ⊑ Diff, Disc ⊑ Top`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Bot,
    Diff,
    Disc,
    Top,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Bot, Metric::Diff, Metric::Disc, Metric::Top];

    pub fn leq(self, other: Metric) -> bool {
        matches!(
            (self, other),
            (Metric::Bot, _) | (_, Metric::Top) | (Metric::Diff, Metric::Diff) | (Metric::Disc, Metric::Disc)
        )
    }

    /// Least upper bound.
    pub fn join(self, other: Metric) -> Metric {
        match (self, other) {
            (a, b) if a == b => a,
            (Metric::Bot, x) | (x, Metric::Bot) => x,
            _ => Metric::Top,
        }
    }

    /// Greatest lower bound.
    pub fn meet(self, other: Metric) -> Metric {
        match (self, other) {
            (a, b) if a == b => a,
            (Metric::Top, x) | (x, Metric::Top) => x,
            _ => Metric::Bot,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Bot => "bot",
            Metric::Diff => "diff",
            Metric::Disc => "disc",
            Metric::Top => "top",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown metric {0:?}")]
pub struct UnknownMetric(pub String);

impl FromStr for Metric {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bot" => Ok(Metric::Bot),
            "diff" => Ok(Metric::Diff),
            "disc" => Ok(Metric::Disc),
            "top" => Ok(Metric::Top),
            other => Err(UnknownMetric(other.to_owned())),
        }
    }
}

/// Whether `r1` and `r2` are within `bound` of each other under `metric`.
pub fn within_distance(r1: f64, r2: f64, bound: ExtReal, metric: Metric) -> bool {
    if bound.is_infinite() {
        return true;
    }
    let diff = || (r1 - r2).abs() <= bound.get();
    let disc = || if r1 == r2 { true } else { 1.0 <= bound.get() };
    match metric {
        Metric::Diff => diff(),
        Metric::Disc => disc(),
        Metric::Bot => diff() && disc(),
        Metric::Top => diff() || disc(),
    }
}
