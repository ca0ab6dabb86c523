use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::neighbor::{sample_neighbors, NeighborSpec};
use super::HarnessError;
use crate::eval::{input_env, EvalConfig, EvalResult, Evaluator, Inputs, RuleCoverage};
use crate::model::{within_distance, Env, ExtReal, Metric, SensEnv, Store, TaggedReal, Value};

/// Relative and absolute slack on distance bounds, absorbing floating-point
/// rounding in sums and products.
const REL_SLACK: f64 = 1e-9;
const ABS_SLACK: f64 = 1e-12;

/// Output distance outside the bound the analysis predicted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub trial: u64,
    pub seed: u64,
    pub inputs1: BTreeMap<String, f64>,
    pub inputs2: BTreeMap<String, f64>,
    /// Where in the result the values differ, e.g. `value.1` or `store[0]`.
    pub path: String,
    pub value1: String,
    pub value2: String,
    pub observed: f64,
    pub bound: String,
    pub metric: Metric,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepMismatch {
    pub trial: u64,
    pub steps1: u64,
    pub steps2: u64,
}

/// Analysis tags that differ between paired runs, or from the base run, or
/// values whose shapes differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TagMismatch {
    pub trial: u64,
    pub path: String,
    pub tag1: String,
    pub tag2: String,
    pub base: String,
}

/// A paired run that failed although the base run succeeded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialError {
    pub trial: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreservationReport {
    pub trials: u64,
    pub seed: u64,
    /// Tags of the base result, e.g. `42@{o:2}#diff`.
    pub base: String,
    pub steps: u64,
    /// Largest distance seen between paired top-level real results.
    pub max_observed: f64,
    pub violations: Vec<Violation>,
    pub step_mismatches: Vec<StepMismatch>,
    pub tag_mismatches: Vec<TagMismatch>,
    pub trial_errors: Vec<TrialError>,
    #[serde(skip)]
    pub coverage: RuleCoverage,
}

impl PreservationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
            && self.step_mismatches.is_empty()
            && self.tag_mismatches.is_empty()
            && self.trial_errors.is_empty()
    }
}

fn values_of(inputs: &Inputs) -> BTreeMap<String, f64> {
    inputs.iter().map(|(k, d)| (k.clone(), d.value)).collect()
}

fn tag(t: &TaggedReal) -> String {
    format!("{}#{}", t.senv, t.metric)
}

struct Pairing<'a> {
    trial: u64,
    seed: u64,
    distance: &'a SensEnv,
    inputs1: &'a Inputs,
    inputs2: &'a Inputs,
    max_observed: f64,
    violations: Vec<Violation>,
    tag_mismatches: Vec<TagMismatch>,
}

impl Pairing<'_> {
    fn shape(&mut self, path: &str, v1: &Value, v2: &Value, base: &Value) {
        self.tag_mismatches.push(TagMismatch {
            trial: self.trial,
            path: path.to_owned(),
            tag1: v1.to_string(),
            tag2: v2.to_string(),
            base: base.to_string(),
        });
    }

    fn reals(&mut self, path: &str, t1: &TaggedReal, t2: &TaggedReal, base: &TaggedReal, top: bool) {
        if t1.senv != t2.senv || t1.metric != t2.metric || t1.senv != base.senv || t1.metric != base.metric {
            self.tag_mismatches.push(TagMismatch {
                trial: self.trial,
                path: path.to_owned(),
                tag1: tag(t1),
                tag2: tag(t2),
                base: tag(base),
            });
            return;
        }
        let bound = self.distance.dot(&t1.senv);
        let observed = (t1.value - t2.value).abs();
        if top && observed.is_finite() {
            self.max_observed = self.max_observed.max(observed);
        }
        let slack = if bound.is_infinite() {
            ExtReal::INFINITY
        } else {
            ExtReal::abs_of(bound.get() * (1.0 + REL_SLACK) + ABS_SLACK)
        };
        let same_nan = t1.value.is_nan() && t2.value.is_nan();
        if !same_nan && !within_distance(t1.value, t2.value, slack, t1.metric) {
            self.violations.push(Violation {
                trial: self.trial,
                seed: self.seed,
                inputs1: values_of(self.inputs1),
                inputs2: values_of(self.inputs2),
                path: path.to_owned(),
                value1: t1.to_string(),
                value2: t2.to_string(),
                observed,
                bound: bound.to_string(),
                metric: t1.metric,
            });
        }
    }

    fn values(&mut self, path: &str, v1: &Value, v2: &Value, base: &Value, top: bool) {
        match (v1, v2, base) {
            (Value::Tagged(a), Value::Tagged(b), Value::Tagged(c)) => self.reals(path, a, b, c, top),
            (Value::Pair(a1, b1), Value::Pair(a2, b2), Value::Pair(a3, b3)) => {
                self.values(&format!("{path}.1"), a1, a2, a3, false);
                self.values(&format!("{path}.2"), b1, b2, b3, false);
            }
            (Value::Loc(a), Value::Loc(b), Value::Loc(c)) if a == b && b == c => {}
            (Value::Closure(a), Value::Closure(b), Value::Closure(c))
                if a.param == b.param && a.body == b.body && b.param == c.param && b.body == c.body =>
            {
                self.envs(&format!("{path}.env"), &a.env, &b.env, &c.env, v1, v2, base);
            }
            _ => self.shape(path, v1, v2, base),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn envs(&mut self, path: &str, e1: &Env, e2: &Env, e3: &Env, v1: &Value, v2: &Value, base: &Value) {
        let (b1, b2, b3) = (e1.bindings(), e2.bindings(), e3.bindings());
        let names = |b: &[(crate::model::Name, Value)]| b.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
        if names(&b1) != names(&b2) || names(&b2) != names(&b3) {
            self.shape(path, v1, v2, base);
            return;
        }
        for (((name, x1), (_, x2)), (_, x3)) in b1.iter().zip(&b2).zip(&b3) {
            self.values(&format!("{path}.{name}"), x1, x2, x3, false);
        }
    }

    fn stores(&mut self, s1: &Store, s2: &Store, base: &Store) {
        if s1.len() != s2.len() || s2.len() != base.len() {
            self.tag_mismatches.push(TagMismatch {
                trial: self.trial,
                path: "store".to_owned(),
                tag1: format!("{} cells", s1.len()),
                tag2: format!("{} cells", s2.len()),
                base: format!("{} cells", base.len()),
            });
            return;
        }
        for ((l, a), ((_, b), (_, c))) in s1.iter().zip(s2.iter().zip(base.iter())) {
            self.values(&format!("store[{l}]"), a, b, c, false);
        }
    }
}

/// Paired-run check of metric preservation with the default evaluator.
pub fn check_preservation(
    program: &crate::model::Expr,
    spec: &NeighborSpec,
    trials: u64,
    seed: u64,
) -> Result<PreservationReport, HarnessError> {
    check_preservation_with(program, spec, trials, seed, EvalConfig::default())
}

/// Evaluates `program` on the base inputs, then on `trials` pairs of inputs
/// drawn within Σ' of the base and of each other. Each pair must take the
/// same number of steps, carry the base run's tags, and produce values within
/// `Σ'·Σ` of each other under the result metric.
pub fn check_preservation_with(
    program: &crate::model::Expr,
    spec: &NeighborSpec,
    trials: u64,
    seed: u64,
    config: EvalConfig,
) -> Result<PreservationReport, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::ZeroTrials);
    }
    let mut evaluator = Evaluator::new(config);
    let base: EvalResult = evaluator
        .eval(&input_env(spec.inputs()), Store::new(), program)
        .map_err(HarnessError::BaseEvaluationFailed)?;
    let coverage = evaluator.coverage().clone();

    let mut report = PreservationReport {
        trials,
        seed,
        base: base.value.to_string(),
        steps: base.steps,
        max_observed: 0.0,
        violations: Vec::new(),
        step_mismatches: Vec::new(),
        tag_mismatches: Vec::new(),
        trial_errors: Vec::new(),
        coverage,
    };

    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let (inputs1, inputs2) = sample_neighbors(spec, &mut rng);
        let run = |inputs: &Inputs| Evaluator::new(config).eval(&input_env(inputs), Store::new(), program);
        let (r1, r2) = match (run(&inputs1), run(&inputs2)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                report.trial_errors.push(TrialError { trial, error: e.to_string() });
                continue;
            }
        };
        if r1.steps != r2.steps {
            report.step_mismatches.push(StepMismatch {
                trial,
                steps1: r1.steps,
                steps2: r2.steps,
            });
        }
        let mut pairing = Pairing {
            trial,
            seed,
            distance: spec.distance(),
            inputs1: &inputs1,
            inputs2: &inputs2,
            max_observed: report.max_observed,
            violations: Vec::new(),
            tag_mismatches: Vec::new(),
        };
        pairing.values("value", &r1.value, &r2.value, &base.value, true);
        pairing.stores(&r1.store, &r2.store, &base.store);
        report.max_observed = pairing.max_observed;
        report.violations.append(&mut pairing.violations);
        report.tag_mismatches.append(&mut pairing.tag_mismatches);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{EvalError, InputDecl, Mutation};
    use crate::frontend::parse_program;
    use crate::model::SourceId;

    fn spec(metric: Metric, d: f64) -> NeighborSpec {
        let mut inputs = Inputs::new();
        inputs.insert(
            "x".into(),
            InputDecl {
                value: 21.0,
                source: SourceId::new("o").unwrap(),
                metric,
            },
        );
        NeighborSpec::uniform(inputs, d).unwrap()
    }

    #[test]
    fn self_addition_is_preserved() {
        let p = parse_program("(+ x x)").unwrap();
        let r = check_preservation(&p, &spec(Metric::Diff, 1.0), 1000, 42).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.max_observed <= 2.0 && r.max_observed > 1.5);
        assert_eq!(r.base, "42@{o:2}#diff");
    }

    #[test]
    fn sensitive_guard_fails_the_base_run() {
        let p = parse_program("(if0 x 1 2)").unwrap();
        let err = check_preservation(&p, &spec(Metric::Diff, 1.0), 10, 0).unwrap_err();
        assert!(matches!(err, HarnessError::BaseEvaluationFailed(EvalError::SensitiveGuard { .. })));
    }

    #[test]
    fn applications_take_equal_steps() {
        let p = parse_program("(app (lam f (app f (app f x))) (lam y (+ y y)))").unwrap();
        let r = check_preservation(&p, &spec(Metric::Diff, 1.0), 500, 1).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.steps, 3);
    }

    #[test]
    fn dropped_plus_senv_is_caught() {
        let p = parse_program("(+ x x)").unwrap();
        let config = EvalConfig {
            mutation: Some(Mutation::DropPlusSenv),
            ..EvalConfig::default()
        };
        let r = check_preservation_with(&p, &spec(Metric::Diff, 1.0), 200, 3, config).unwrap();
        assert!(!r.violations.is_empty());
    }

    #[test]
    fn stores_are_compared() {
        let p = parse_program("(app (lam r (read r)) (ref (scalel 3 x)))").unwrap();
        let config = EvalConfig {
            mutation: Some(Mutation::WrongTimesScaling),
            ..EvalConfig::default()
        };
        let r = check_preservation_with(&p, &spec(Metric::Diff, 1.0), 200, 3, config).unwrap();
        assert!(r.violations.iter().any(|v| v.path == "store[0]"));
        assert!(r.violations.iter().any(|v| v.path == "value"));
    }

    #[test]
    fn scaling_disc_values_below_one_breaks_the_relation() {
        // A discrete value scaled by a constant smaller than one keeps the
        // discrete metric with a bound below 1, which the relation cannot
        // meet once the values differ.
        let p = parse_program("(scalel 0.5 x)").unwrap();
        let r = check_preservation(&p, &spec(Metric::Disc, 1.0), 200, 5).unwrap();
        assert!(!r.violations.is_empty());
    }

    #[test]
    fn zero_trials_rejected() {
        let p = parse_program("x").unwrap();
        assert_eq!(
            check_preservation(&p, &spec(Metric::Diff, 1.0), 0, 0),
            Err(HarnessError::ZeroTrials)
        );
    }
}
