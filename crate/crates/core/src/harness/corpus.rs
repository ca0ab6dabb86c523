use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::neighbor::NeighborSpec;
use super::preservation::{check_preservation_with, PreservationReport};
use super::HarnessError;
use crate::eval::{input_env, EvalConfig, Evaluator, Rule, RuleCoverage};
use crate::frontend::{inputs_from_json, parse_program};
use crate::model::{Expr, ExtReal, SensEnv, SourceId, Store};

/// One corpus entry: `{name}.sdl` plus `{name}.spec.json`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub program: Expr,
    pub spec: NeighborSpec,
    /// Overrides the corpus-wide trial count.
    pub trials: Option<u64>,
    /// Name of the error the base run must raise, e.g. `SensitiveGuard`.
    pub expect_error: Option<String>,
}

fn io_error(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

fn fixture_error(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Fixture {
        path: path.to_owned(),
        message: message.into(),
    }
}

fn parse_distance(path: &Path, value: Option<&serde_json::Value>) -> Result<SensEnv, HarnessError> {
    let Some(value) = value else {
        return Ok(SensEnv::zero());
    };
    let obj = value
        .as_object()
        .ok_or_else(|| fixture_error(path, "`distance` must map sources to numbers"))?;
    let mut env = SensEnv::zero();
    for (source, d) in obj {
        let d = d
            .as_f64()
            .and_then(ExtReal::new)
            .filter(|d| !d.is_infinite())
            .ok_or_else(|| HarnessError::InvalidDistance(source.clone()))?;
        let source = SourceId::new(source).map_err(|e| fixture_error(path, e.to_string()))?;
        env.set(source, d);
    }
    Ok(env)
}

/// Reads a program and its spec file.
pub fn load_fixture(program_path: &Path, spec_path: &Path) -> Result<Fixture, HarnessError> {
    let text = fs::read_to_string(program_path).map_err(|e| io_error(program_path, e))?;
    let program = parse_program(&text).map_err(|error| HarnessError::Parse {
        path: program_path.to_owned(),
        error,
    })?;
    let spec_text = fs::read_to_string(spec_path).map_err(|e| io_error(spec_path, e))?;
    let doc: serde_json::Value =
        serde_json::from_str(&spec_text).map_err(|e| fixture_error(spec_path, e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| fixture_error(spec_path, "spec must be a JSON object"))?;
    if let Some(key) = obj
        .keys()
        .find(|k| !matches!(k.as_str(), "inputs" | "distance" | "trials" | "expect_error"))
    {
        return Err(fixture_error(spec_path, format!("unknown field `{key}`")));
    }
    let inputs = match obj.get("inputs") {
        Some(v) => inputs_from_json(v).map_err(|e| fixture_error(spec_path, e.to_string()))?,
        None => Default::default(),
    };
    let distance = parse_distance(spec_path, obj.get("distance"))?;
    let trials = match obj.get("trials") {
        None => None,
        Some(v) => match v.as_u64() {
            Some(n) if n > 0 => Some(n),
            _ => return Err(fixture_error(spec_path, "`trials` must be a positive integer")),
        },
    };
    let expect_error = match obj.get("expect_error") {
        None => None,
        Some(serde_json::Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(fixture_error(spec_path, "`expect_error` must be a string")),
    };
    let name = program_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Fixture {
        name,
        program,
        spec: NeighborSpec::new(inputs, distance)?,
        trials,
        expect_error,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureStatus {
    Passed,
    /// Paired runs disagreed with the analysis.
    Violated,
    /// The base run raised the error the fixture expects.
    ExpectedError,
    /// The fixture expects an error but the base run succeeded.
    MissedError,
    /// The base run raised an error the fixture does not expect.
    UnexpectedError,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixtureOutcome {
    pub name: String,
    pub status: FixtureStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PreservationReport>,
}

impl FixtureOutcome {
    pub fn ok(&self) -> bool {
        matches!(self.status, FixtureStatus::Passed | FixtureStatus::ExpectedError)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub programs: usize,
    pub trials: u64,
    pub passed: bool,
    /// Rules no base run exercised.
    pub uncovered_rules: Vec<String>,
    pub outcomes: Vec<FixtureOutcome>,
    #[serde(skip)]
    pub coverage: RuleCoverage,
}

impl CorpusSummary {
    pub fn failures(&self) -> impl Iterator<Item = &FixtureOutcome> {
        self.outcomes.iter().filter(|o| !o.ok())
    }
}

fn run_fixture(fixture: &Fixture, trials: u64, seed: u64, config: EvalConfig, coverage: &mut RuleCoverage) -> FixtureOutcome {
    let outcome = |status, error, report| FixtureOutcome {
        name: fixture.name.clone(),
        status,
        error,
        report,
    };
    if let Some(expected) = &fixture.expect_error {
        let mut evaluator = Evaluator::new(config);
        let result = evaluator.eval(&input_env(fixture.spec.inputs()), Store::new(), &fixture.program);
        coverage.merge(evaluator.coverage());
        return match result {
            Ok(r) => outcome(FixtureStatus::MissedError, Some(format!("evaluated to {}", r.value)), None),
            Err(e) if e.name() == expected => outcome(FixtureStatus::ExpectedError, Some(e.name().to_owned()), None),
            Err(e) => outcome(FixtureStatus::UnexpectedError, Some(e.to_string()), None),
        };
    }
    let trials = fixture.trials.unwrap_or(trials);
    match check_preservation_with(&fixture.program, &fixture.spec, trials, seed, config) {
        Ok(report) => {
            coverage.merge(&report.coverage);
            let status = if report.passed() {
                FixtureStatus::Passed
            } else {
                FixtureStatus::Violated
            };
            outcome(status, None, Some(report))
        }
        Err(e) => outcome(FixtureStatus::UnexpectedError, Some(e.to_string()), None),
    }
}

/// Lists the fixtures of a corpus directory in name order.
pub fn corpus_fixtures(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>, HarnessError> {
    let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut programs = Vec::new();
    let mut specs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if let Some(stem) = name.strip_suffix(".spec.json") {
            specs.push((stem.to_owned(), path));
        } else if let Some(stem) = name.strip_suffix(".sdl") {
            programs.push((stem.to_owned(), path));
        }
    }
    programs.sort();
    if programs.is_empty() {
        return Err(HarnessError::EmptyCorpus(dir.to_owned()));
    }
    if let Some((_, spec)) = specs.iter().find(|(s, _)| !programs.iter().any(|(p, _)| p == s)) {
        return Err(HarnessError::MissingProgram(spec.clone()));
    }
    programs
        .into_iter()
        .map(|(stem, program)| {
            let spec = dir.join(format!("{stem}.spec.json"));
            if spec.is_file() {
                Ok((program, spec))
            } else {
                Err(HarnessError::MissingSpec(program))
            }
        })
        .collect()
}

/// Runs every fixture in `dir`. Each fixture uses its own trial seed derived
/// from `seed` and its position.
pub fn run_corpus(dir: &Path, trials: u64, seed: u64, config: EvalConfig) -> Result<CorpusSummary, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::ZeroTrials);
    }
    let fixtures = corpus_fixtures(dir)?
        .iter()
        .map(|(p, s)| load_fixture(p, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut coverage = RuleCoverage::default();
    let mut total = 0;
    let outcomes: Vec<FixtureOutcome> = fixtures
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let o = run_fixture(f, trials, seed.wrapping_add(i as u64), config, &mut coverage);
            total += o.report.as_ref().map_or(0, |r| r.trials);
            o
        })
        .collect();
    let uncovered: Vec<Rule> = coverage.missing();
    Ok(CorpusSummary {
        programs: outcomes.len(),
        trials: total,
        passed: outcomes.iter().all(FixtureOutcome::ok),
        uncovered_rules: uncovered.iter().map(Rule::to_string).collect(),
        outcomes,
        coverage,
    })
}
