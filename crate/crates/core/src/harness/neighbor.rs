use std::collections::BTreeMap;

use rand::Rng;

use super::HarnessError;
use crate::eval::{InputDecl, Inputs};
use crate::model::{ExtReal, Metric, SensEnv, SourceId};

/// Base inputs plus the distance Σ' each source may move by.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborSpec {
    inputs: Inputs,
    distance: SensEnv,
}

impl NeighborSpec {
    pub fn new(inputs: Inputs, distance: SensEnv) -> Result<NeighborSpec, HarnessError> {
        if let Some((s, _)) = distance.iter().find(|(_, d)| d.is_infinite()) {
            return Err(HarnessError::InvalidDistance(s.to_string()));
        }
        Ok(NeighborSpec { inputs, distance })
    }

    /// Allows every listed source to move by `d`.
    pub fn uniform(inputs: Inputs, d: f64) -> Result<NeighborSpec, HarnessError> {
        let mut distance = SensEnv::zero();
        for decl in inputs.values() {
            let d = ExtReal::new(d).ok_or_else(|| HarnessError::InvalidDistance(decl.source.to_string()))?;
            distance.set(decl.source.clone(), d);
        }
        NeighborSpec::new(inputs, distance)
    }

    pub fn inputs(&self) -> &Inputs {
        &self.inputs
    }

    pub fn distance(&self) -> &SensEnv {
        &self.distance
    }

    fn allowed(&self, source: &SourceId) -> f64 {
        self.distance.get(source).get()
    }
}

/// Uniform draw from `[lo, hi]`, hitting an endpoint a quarter of the time
/// so tight bounds get exercised.
fn draw<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    match rng.gen_range(0..8) {
        0 => lo,
        1 => hi,
        _ => rng.gen_range(lo..=hi),
    }
}

fn pair_diff<R: Rng>(rng: &mut R, base: f64, d: f64) -> (f64, f64) {
    if d == 0.0 {
        return (base, base);
    }
    let a = draw(rng, base - d, base + d);
    let b = draw(rng, (base - d).max(a - d), (base + d).min(a + d));
    if rng.gen() {
        (a, b)
    } else {
        (b, a)
    }
}

fn keep_or_resample<R: Rng>(rng: &mut R, base: f64) -> f64 {
    if rng.gen() {
        base
    } else {
        rng.gen_range(base - 10.0..=base + 10.0)
    }
}

/// Two input environments within Σ' of the base and of each other. Diff
/// inputs move uniformly within ±Σ'(o); disc inputs are kept or replaced by a
/// fresh draw with probability ½ when Σ'(o) ≥ 1.
pub fn sample_neighbors<R: Rng>(spec: &NeighborSpec, rng: &mut R) -> (Inputs, Inputs) {
    let mut left = BTreeMap::new();
    let mut right = BTreeMap::new();
    for (name, decl) in &spec.inputs {
        let d = spec.allowed(&decl.source);
        let (a, b) = match decl.metric {
            Metric::Diff | Metric::Top => pair_diff(rng, decl.value, d),
            Metric::Bot if d >= 1.0 => pair_diff(rng, decl.value, d),
            Metric::Disc if d >= 1.0 => (keep_or_resample(rng, decl.value), keep_or_resample(rng, decl.value)),
            Metric::Bot | Metric::Disc => (decl.value, decl.value),
        };
        left.insert(name.clone(), InputDecl { value: a, ..decl.clone() });
        right.insert(name.clone(), InputDecl { value: b, ..decl.clone() });
    }
    (left, right)
}
