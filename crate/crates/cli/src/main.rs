use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use senstrace::eval::{eval_entry, EvalConfig, Mutation};
use senstrace::frontend::{parse_inputs, parse_program, render_result};
use senstrace::harness::{
    check_preservation_with, dp_gradient_descent, load_fixture, run_corpus, GdConfig, GdError, HarnessError,
};
use senstrace::model::Expr;

const EXIT_CODES: &str = "\
Exit status:
  0  success
  1  I/O, parse or usage error
  2  analysis error (SensitiveGuard, SensitiveScalar) or other evaluation error
  3  metric-preservation violation
  4  privacy filter halted";

#[derive(Parser)]
#[command(name = "senstrace", version, about = "Dynamic sensitivity analysis for a small functional language", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a program and print its value with its sensitivity tag.
    Run(RunArgs),
    /// Check metric preservation of one program on random neighbouring inputs.
    Check(CheckArgs),
    /// Check every program in a fixture directory.
    Corpus(CorpusArgs),
    /// Train a private logistic-regression model on synthetic data.
    DemoGd(DemoArgs),
}

#[derive(Args)]
struct Common {
    /// Random seed. Falls back to SENSTRACE_SEED.
    #[arg(long, env = "SENSTRACE_SEED")]
    seed: Option<u64>,
    /// Print a single JSON document on standard output.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    program: PathBuf,
    inputs: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    program: PathBuf,
    /// Fixture spec: base inputs, per-source distance and optional trial count.
    spec: PathBuf,
    /// Number of neighbour pairs [default: the spec's count, else 1000].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    #[arg(long, hide = true)]
    mutation: Option<Mutation>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CorpusArgs {
    dir: PathBuf,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, hide = true)]
    mutation: Option<Mutation>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DemoArgs {
    /// Rényi order.
    #[arg(long, default_value_t = 10.0, value_parser = parse_alpha)]
    alpha: f64,
    /// Rényi ε of each noisy gradient.
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Rényi ε budget of the filter.
    #[arg(long, default_value_t = 10.0)]
    budget: f64,
    #[command(flatten)]
    common: Common,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if a > 1.0 && a.is_finite() {
        Ok(a)
    } else {
        Err("alpha must be a finite number greater than 1".to_owned())
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

fn load_program(path: &Path) -> Result<Expr, Failure> {
    parse_program(&read(path)?).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
}

fn harness_failure(e: HarnessError) -> Failure {
    match e {
        HarnessError::BaseEvaluationFailed(e) => Failure::new(2, format!("{}: {e}", e.name())),
        other => Failure::new(1, other.to_string()),
    }
}

fn config(mutation: Option<Mutation>) -> EvalConfig {
    EvalConfig {
        mutation,
        ..EvalConfig::default()
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let program = load_program(&args.program)?;
    let inputs = parse_inputs(&read(&args.inputs)?)
        .map_err(|e| Failure::new(1, format!("{}: {e}", args.inputs.display())))?;
    let result = eval_entry(&inputs, &program).map_err(|e| Failure::new(2, format!("{}: {e}", e.name())))?;
    if args.common.json {
        println!("{}", render_result(&result));
    } else {
        println!("{}  ({} steps)", result.value, result.steps);
    }
    Ok(())
}

fn check(args: CheckArgs) -> Result<(), Failure> {
    let fixture = load_fixture(&args.program, &args.spec).map_err(harness_failure)?;
    let trials = args.trials.or(fixture.trials).unwrap_or(1000);
    let seed = args.common.seed.unwrap_or(0);
    let report = check_preservation_with(&fixture.program, &fixture.spec, trials, seed, config(args.mutation))
        .map_err(harness_failure)?;
    let doc = serde_json::to_value(&report).expect("reports serialize");
    if args.common.json || !report.passed() {
        print_json(&doc);
    } else {
        println!(
            "ok: {} trials, analysis {}, largest observed distance {}",
            report.trials, report.base, report.max_observed
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::new(3, format!("{}: metric preservation violated", args.program.display())))
    }
}

fn corpus(args: CorpusArgs) -> Result<(), Failure> {
    let seed = args.common.seed.unwrap_or(0);
    let summary = run_corpus(&args.dir, args.trials, seed, config(args.mutation)).map_err(harness_failure)?;
    if args.common.json {
        print_json(&serde_json::to_value(&summary).expect("summaries serialize"));
    } else {
        for o in &summary.outcomes {
            let status = serde_json::to_value(&o.status).expect("statuses serialize");
            let status = status.as_str().unwrap_or_default();
            match &o.error {
                Some(e) => println!("{:<24} {status} ({e})", o.name),
                None => println!("{:<24} {status}", o.name),
            }
        }
        println!("{} programs, {} trials", summary.programs, summary.trials);
        if !summary.uncovered_rules.is_empty() {
            println!("rules never exercised: {}", summary.uncovered_rules.join(", "));
        }
    }
    if summary.passed {
        Ok(())
    } else {
        let n = summary.failures().count();
        Err(Failure::new(3, format!("{n} fixture(s) failed")))
    }
}

fn demo(args: DemoArgs) -> Result<(), Failure> {
    let defaults = GdConfig::default();
    let config = GdConfig {
        seed: args.common.seed.unwrap_or(defaults.seed),
        alpha: args.alpha,
        eps_iter: args.eps,
        budget: args.budget,
        ..defaults
    };
    match dp_gradient_descent(&config) {
        Ok(out) => {
            if args.common.json {
                print_json(&json!({
                    "iterations": out.iterations,
                    "noisy_accuracy": out.noisy_accuracy,
                    "theta": out.theta,
                    "odometer": out.odometer.export(),
                }));
            } else {
                println!("noisy accuracy: {:.4} after {} iterations", out.noisy_accuracy, out.iterations);
                println!("{}", out.odometer);
            }
            Ok(())
        }
        Err(GdError::FilterHalt {
            completed_iterations,
            odometer,
            ..
        }) => {
            if args.common.json {
                print_json(&json!({
                    "halted": true,
                    "iterations": completed_iterations,
                    "odometer": odometer.export(),
                }));
            } else {
                println!("{odometer}");
            }
            Err(Failure::new(
                4,
                format!("FilterHalt: privacy budget exhausted after {completed_iterations} iterations"),
            ))
        }
        Err(e) => Err(Failure::new(1, e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Check(a) => check(a),
        Command::Corpus(a) => corpus(a),
        Command::DemoGd(a) => demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
