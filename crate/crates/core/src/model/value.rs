use std::fmt;
use std::sync::Arc;

use super::{Expr, Metric, Name, SensEnv};

/// Runtime value. Only `Tagged` carries analysis information.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Tagged(TaggedReal),
    Pair(Arc<Value>, Arc<Value>),
    Closure(Arc<Closure>),
    Loc(usize),
}

/// `r@Σ_m`: a real together with its sensitivity environment and metric.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggedReal {
    pub value: f64,
    pub senv: SensEnv,
    pub metric: Metric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Closure {
    pub param: Name,
    pub body: Arc<Expr>,
    pub env: Env,
}

impl TaggedReal {
    pub fn new(value: f64, senv: SensEnv, metric: Metric) -> TaggedReal {
        TaggedReal { value, senv, metric }
    }
}

impl Value {
    pub fn tagged(value: f64, senv: SensEnv, metric: Metric) -> Value {
        Value::Tagged(TaggedReal::new(value, senv, metric))
    }

    /// A literal: `r@Z_disc`.
    pub fn literal(value: f64) -> Value {
        Value::tagged(value, SensEnv::zero(), Metric::Disc)
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Arc::new(a), Arc::new(b))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Tagged(_) => "real",
            Value::Pair(..) => "pair",
            Value::Closure(_) => "closure",
            Value::Loc(_) => "location",
        }
    }

    pub fn as_tagged(&self) -> Option<&TaggedReal> {
        match self {
            Value::Tagged(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for TaggedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}#{}", self.value, self.senv, self.metric)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Tagged(t) => t.fmt(f),
            Value::Pair(a, b) => write!(f, "<{a},{b}>"),
            Value::Closure(_) => f.write_str("<closure>"),
            Value::Loc(l) => write!(f, "loc({l})"),
        }
    }
}

/// Lexical environment, a persistent list so closures can share it.
#[derive(Clone, Debug, Default)]
pub struct Env(Option<Arc<EnvNode>>);

#[derive(Debug)]
struct EnvNode {
    name: Name,
    value: Value,
    next: Env,
}

impl Env {
    pub fn empty() -> Env {
        Env(None)
    }

    /// `{name ↦ value} ⊎ self`; the new binding shadows older ones.
    pub fn extend(&self, name: Name, value: Value) -> Env {
        Env(Some(Arc::new(EnvNode {
            name,
            value,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = &self.0;
        while let Some(node) = cur {
            if &*node.name == name {
                return Some(&node.value);
            }
            cur = &node.next.0;
        }
        None
    }

    /// Visible bindings, innermost first, shadowed entries skipped.
    pub fn bindings(&self) -> Vec<(Name, Value)> {
        let mut out: Vec<(Name, Value)> = Vec::new();
        let mut cur = &self.0;
        while let Some(node) = cur {
            if !out.iter().any(|(n, _)| *n == node.name) {
                out.push((node.name.clone(), node.value.clone()));
            }
            cur = &node.next.0;
        }
        out
    }
}

impl PartialEq for Env {
    fn eq(&self, other: &Env) -> bool {
        match (&self.0, &other.0) {
            (Some(a), Some(b)) if Arc::ptr_eq(a, b) => true,
            _ => {
                let mut a = self.bindings();
                let mut b = other.bindings();
                a.sort_by(|x, y| x.0.cmp(&y.0));
                b.sort_by(|x, y| x.0.cmp(&y.0));
                a == b
            }
        }
    }
}

impl FromIterator<(Name, Value)> for Env {
    fn from_iter<I: IntoIterator<Item = (Name, Value)>>(iter: I) -> Self {
        iter.into_iter()
            .fold(Env::empty(), |env, (name, value)| env.extend(name, value))
    }
}

/// Mutable store. Locations are allocated by a monotone counter, so paired
/// runs of one program allocate identical locations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Store {
    cells: Vec<Value>,
}

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    pub fn alloc(&mut self, value: Value) -> usize {
        self.cells.push(value);
        self.cells.len() - 1
    }

    pub fn get(&self, loc: usize) -> Option<&Value> {
        self.cells.get(loc)
    }

    /// Returns `false` if `loc` was never allocated.
    pub fn write(&mut self, loc: usize, value: Value) -> bool {
        match self.cells.get_mut(loc) {
            Some(cell) => {
                *cell = value;
                true
            }
            None => false,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Value)> {
        self.cells.iter().enumerate()
    }
}
