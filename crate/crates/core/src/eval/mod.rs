//! Big-step, step-indexed evaluation of the core language with dynamic
//! sensitivity analysis.
//!
//! Every base value carries a sensitivity environment and a metric, and the
//! evaluator counts function applications (the step index). Evaluation runs on
//! an explicit continuation stack so the nesting depth is bounded by
//! [`EvalConfig::max_depth`] rather than by the native stack.

mod machine;
mod mutation;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::model::{Env, Expr, ExtReal, Metric, SensEnv, SourceId, Store, Value};

pub use machine::Evaluator;
pub use mutation::Mutation;

pub const DEFAULT_MAX_DEPTH: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    pub max_depth: usize,
    /// Deliberately broken rule, used to check that the preservation harness
    /// notices unsound analyses. `None` in normal use.
    pub mutation: Option<Mutation>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            max_depth: DEFAULT_MAX_DEPTH,
            mutation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub store: Store,
    pub value: Value,
    /// Number of function applications performed.
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("type mismatch: expected {expected}, got {got}")]
    TypeMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("conditional guard depends on sensitive data {senv}")]
    SensitiveGuard { senv: SensEnv },
    #[error("scalar operand of a multiplication depends on sensitive data {senv}")]
    SensitiveScalar { senv: SensEnv },
    #[error("location {0} is not allocated")]
    DanglingLocation(usize),
    #[error("evaluation exceeded {0} nested frames")]
    DepthExceeded(usize),
}

impl EvalError {
    /// Stable name used in reports and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            EvalError::UnboundVariable(_) => "UnboundVariable",
            EvalError::TypeMismatch { .. } => "TypeMismatch",
            EvalError::SensitiveGuard { .. } => "SensitiveGuard",
            EvalError::SensitiveScalar { .. } => "SensitiveScalar",
            EvalError::DanglingLocation(_) => "DanglingLocation",
            EvalError::DepthExceeded(_) => "DepthExceeded",
        }
    }

    /// Errors raised by the analysis itself rather than by ill-formed programs.
    pub fn is_analysis_error(&self) -> bool {
        matches!(
            self,
            EvalError::SensitiveGuard { .. } | EvalError::SensitiveScalar { .. }
        )
    }
}

/// The evaluation rules, used for coverage accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Var,
    Real,
    Fun,
    Plus,
    TimesL,
    TimesR,
    IfZeroTrue,
    IfZeroFalse,
    Pair,
    Proj,
    Ref,
    Read,
    Write,
    App,
}

impl Rule {
    pub const ALL: [Rule; 14] = [
        Rule::Var,
        Rule::Real,
        Rule::Fun,
        Rule::Plus,
        Rule::TimesL,
        Rule::TimesR,
        Rule::IfZeroTrue,
        Rule::IfZeroFalse,
        Rule::Pair,
        Rule::Proj,
        Rule::Ref,
        Rule::Read,
        Rule::Write,
        Rule::App,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// How many times each rule fired.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleCoverage {
    counts: [u64; 14],
}

impl RuleCoverage {
    pub(crate) fn fire(&mut self, rule: Rule) {
        self.counts[rule.index()] += 1;
    }

    pub fn count(&self, rule: Rule) -> u64 {
        self.counts[rule.index()]
    }

    pub fn merge(&mut self, other: &RuleCoverage) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += *b;
        }
    }

    pub fn missing(&self) -> Vec<Rule> {
        Rule::ALL
            .into_iter()
            .filter(|r| self.count(*r) == 0)
            .collect()
    }
}

/// Declaration of one sensitive input: its value, the source it comes from,
/// and the metric under which it is compared.
#[derive(Clone, Debug, PartialEq)]
pub struct InputDecl {
    pub value: f64,
    pub source: SourceId,
    pub metric: Metric,
}

pub type Inputs = BTreeMap<String, InputDecl>;

/// Builds the initial environment: each input is 1-sensitive in its source.
pub fn input_env(inputs: &Inputs) -> Env {
    inputs
        .iter()
        .map(|(name, decl)| {
            let senv = SensEnv::singleton(decl.source.clone(), ExtReal::ONE);
            (Arc::from(name.as_str()), Value::tagged(decl.value, senv, decl.metric))
        })
        .collect()
}

/// Evaluates with the default configuration.
pub fn eval(env: &Env, store: Store, expr: &Expr) -> Result<EvalResult, EvalError> {
    Evaluator::new(EvalConfig::default()).eval(env, store, expr)
}

/// Evaluates `program` against declared inputs and an empty store.
pub fn eval_entry(inputs: &Inputs, program: &Expr) -> Result<EvalResult, EvalError> {
    eval(&input_env(inputs), Store::new(), program)
}
