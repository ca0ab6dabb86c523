use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::ExtReal;

const PROBE_PREFIX: &str = "#probe/";

static NEXT_PROBE: AtomicU64 = AtomicU64::new(0);

/// Name of a sensitive data source, e.g. a file name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceId(Arc<str>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SourceIdError {
    #[error("source identifier must be non-empty")]
    Empty,
    #[error("source identifier {0:?} uses the reserved probe prefix")]
    Reserved(String),
}

impl SourceId {
    pub fn new(name: impl AsRef<str>) -> Result<SourceId, SourceIdError> {
        let name = name.as_ref();
        if name.is_empty() {
            return Err(SourceIdError::Empty);
        }
        if name.starts_with(PROBE_PREFIX) {
            return Err(SourceIdError::Reserved(name.to_owned()));
        }
        Ok(SourceId(Arc::from(name)))
    }

    /// A fresh source that no user-constructed id can collide with.
    pub(crate) fn fresh_probe() -> SourceId {
        let n = NEXT_PROBE.fetch_add(1, Ordering::Relaxed);
        SourceId(Arc::from(format!("{PROBE_PREFIX}{n}")))
    }

    pub fn is_probe(&self) -> bool {
        self.0.starts_with(PROBE_PREFIX)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Sensitivity environment: how far a value may move per unit of distance in
/// each source. Absent sources have sensitivity zero, and zero entries are
/// never stored, so structural equality is semantic equality.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SensEnv {
    entries: BTreeMap<SourceId, ExtReal>,
}

impl SensEnv {
    /// The zero environment.
    pub fn zero() -> SensEnv {
        SensEnv::default()
    }

    pub fn singleton(source: SourceId, sensitivity: ExtReal) -> SensEnv {
        let mut env = SensEnv::zero();
        env.set(source, sensitivity);
        env
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, source: &SourceId) -> ExtReal {
        self.entries.get(source).copied().unwrap_or(ExtReal::ZERO)
    }

    pub fn set(&mut self, source: SourceId, sensitivity: ExtReal) {
        if sensitivity.is_zero() {
            self.entries.remove(&source);
        } else {
            self.entries.insert(source, sensitivity);
        }
    }

    pub fn remove(&mut self, source: &SourceId) -> ExtReal {
        self.entries.remove(source).unwrap_or(ExtReal::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SourceId, ExtReal)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn sources(&self) -> impl Iterator<Item = &SourceId> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pointwise sum.
    pub fn add(&self, other: &SensEnv) -> SensEnv {
        let mut out = self.clone();
        for (source, value) in other.iter() {
            let sum = out.get(source) + value;
            out.set(source.clone(), sum);
        }
        out
    }

    /// Pointwise scaling, with `0 · ∞ = 0`.
    pub fn scale(&self, factor: ExtReal) -> SensEnv {
        let mut out = SensEnv::zero();
        for (source, value) in self.iter() {
            out.set(source.clone(), factor * value);
        }
        out
    }

    /// Pointwise maximum.
    pub fn join_max(&self, other: &SensEnv) -> SensEnv {
        let mut out = self.clone();
        for (source, value) in other.iter() {
            let m = out.get(source).max(value);
            out.set(source.clone(), m);
        }
        out
    }

    /// Every present source mapped to ∞.
    pub fn saturate(&self) -> SensEnv {
        let mut out = SensEnv::zero();
        for source in self.sources() {
            out.set(source.clone(), ExtReal::INFINITY);
        }
        out
    }

    /// Dot product over the union of domains. Applied as
    /// `distances · coefficients` it gives the distance bound a value with
    /// coefficients `coefficients` may move when each source moves by at most
    /// `distances(o)`.
    pub fn dot(&self, other: &SensEnv) -> ExtReal {
        self.iter()
            .map(|(source, d)| d * other.get(source))
            .sum()
    }

    /// Largest single-source sensitivity (zero for the zero environment).
    pub fn max_sensitivity(&self) -> ExtReal {
        self.iter().map(|(_, v)| v).fold(ExtReal::ZERO, ExtReal::max)
    }

    /// Truncation: every non-zero entry becomes `bound`.
    pub fn truncate(&self, bound: ExtReal) -> SensEnv {
        let mut out = SensEnv::zero();
        for (source, value) in self.iter() {
            out.set(source.clone(), truncate(value, bound));
        }
        out
    }
}

/// `0` when `value` is zero, otherwise `bound`.
pub fn truncate(value: ExtReal, bound: ExtReal) -> ExtReal {
    if value.is_zero() {
        ExtReal::ZERO
    } else {
        bound
    }
}

impl FromIterator<(SourceId, ExtReal)> for SensEnv {
    fn from_iter<I: IntoIterator<Item = (SourceId, ExtReal)>>(iter: I) -> Self {
        let mut env = SensEnv::zero();
        for (source, value) in iter {
            let sum = env.get(&source) + value;
            env.set(source, sum);
        }
        env
    }
}

impl fmt::Display for SensEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (source, value)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{source}:{value}")?;
        }
        f.write_str("}")
    }
}
