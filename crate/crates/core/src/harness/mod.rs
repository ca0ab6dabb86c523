//! Empirical checks of the analysis: paired runs on neighbouring inputs,
//! the fixture corpus, and the private gradient-descent demo.

mod corpus;
mod gd;
mod neighbor;
mod preservation;

use std::path::PathBuf;

use crate::eval::EvalError;
use crate::frontend::ParseError;

pub use corpus::{corpus_fixtures, load_fixture, run_corpus, CorpusSummary, Fixture, FixtureOutcome, FixtureStatus};
pub use gd::{dp_gradient_descent, synthetic_dataset, GdConfig, GdError, GdOutcome, Point};
pub use neighbor::{sample_neighbors, NeighborSpec};
pub use preservation::{
    check_preservation, check_preservation_with, PreservationReport, StepMismatch, TagMismatch, TrialError,
    Violation,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("program fails on the base inputs: {0}")]
    BaseEvaluationFailed(EvalError),
    #[error("distance for source `{0}` must be finite and non-negative")]
    InvalidDistance(String),
    #[error("number of trials must be at least 1")]
    ZeroTrials,
    #[error("no programs found in {}", .0.display())]
    EmptyCorpus(PathBuf),
    #[error("program {} has no spec file", .0.display())]
    MissingSpec(PathBuf),
    #[error("spec {} has no program file", .0.display())]
    MissingProgram(PathBuf),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}: {error}", path.display())]
    Parse { path: PathBuf, error: ParseError },
    #[error("{}: {message}", path.display())]
    Fixture { path: PathBuf, message: String },
}
