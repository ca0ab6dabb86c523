//! One line per acceptance criterion. Run with `--nocapture` to see them.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use senstrace::eval::{eval_entry, EvalConfig, InputDecl, Inputs, Mutation};
use senstrace::frontend::{parse_program, render_result};
use senstrace::harness::{dp_gradient_descent, run_corpus, FixtureStatus, GdConfig};
use senstrace::model::{ExtReal, Metric, SensEnv, SourceId, Value};
use senstrace::privacy::{
    gauss, laplace, renyi_gauss, AccountantScope, FilterKind, OdometerKind, PrivacyError, ReportedCost,
};
use senstrace::sens::{clip_l2, vec_sum, SensScalar, SensVector};

const WORKED_EXAMPLE_BUDGET: Duration = Duration::from_millis(1);
const RENYI_TOLERANCE: f64 = 0.01;
const CORPUS_TRIALS: u64 = 1000;
const CORPUS_BUDGET: Duration = Duration::from_secs(60);
const SMOKE_SAMPLES: usize = 200_000;
const SMOKE_BIN_WIDTH: f64 = 0.5;
const SMOKE_MIN_HITS: usize = 500;
const SMOKE_MAX_LOG_RATIO: f64 = 1.15;
const SMOKE_BUDGET: Duration = Duration::from_secs(30);
const DEMO_MIN_ACCURACY: f64 = 0.85;
const DEMO_BUDGET: Duration = Duration::from_secs(10);

fn src(name: &str) -> SourceId {
    SourceId::new(name).unwrap()
}

fn senv(name: &str, v: f64) -> SensEnv {
    SensEnv::singleton(src(name), ExtReal::new(v).unwrap())
}

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn worked_example() -> Outcome {
    let mut inputs = Inputs::new();
    inputs.insert("x".into(), InputDecl { value: 21.0, source: src("o"), metric: Metric::Diff });
    let program = parse_program("(+ x x)").unwrap();
    let start = Instant::now();
    let result = eval_entry(&inputs, &program).unwrap();
    let elapsed = start.elapsed();
    let expected = Value::tagged(42.0, senv("o", 2.0), Metric::Diff);

    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("p.sdl");
    let inp = dir.path().join("in.json");
    std::fs::write(&prog, "(+ x x)").unwrap();
    std::fs::write(&inp, r#"{"x":{"value":21,"source":"o","metric":"diff"}}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_senstrace"))
        .arg("run")
        .arg(&prog)
        .arg(&inp)
        .arg("--json")
        .output()
        .unwrap();
    let cli = String::from_utf8(out.stdout).unwrap();
    let doc = render_result(&result);
    let ok = result.value == expected
        && result.steps == 0
        && elapsed < WORKED_EXAMPLE_BUDGET
        && cli.trim() == doc
        && doc == r#"{"value":"42","senv":{"o":2},"metric":"diff","steps":0}"#;
    (ok, format!("{doc} in {elapsed:?}"))
}

fn senv_algebra() -> Outcome {
    let e = |pairs: &[(&str, f64)]| -> SensEnv {
        pairs.iter().map(|(s, v)| (src(s), ExtReal::new(*v).unwrap())).collect()
    };
    let sum = e(&[("a", 2.0), ("b", 1.0)]).add(&e(&[("b", 3.0), ("c", 5.0)]));
    (sum == e(&[("a", 2.0), ("b", 4.0), ("c", 5.0)]), sum.to_string())
}

fn wrapper_table() -> Outcome {
    let df = SensScalar::lift(10.0, src("data.csv"), Metric::Diff);
    let five = SensScalar::constant(5.0);
    let rows = [
        (&df + &five, senv("data.csv", 1.0)),
        (&df + &df, senv("data.csv", 2.0)),
        (&df * &five, senv("data.csv", 5.0)),
        (&df * &df, SensEnv::singleton(src("data.csv"), ExtReal::INFINITY)),
    ];
    let ok = rows.iter().all(|(got, want)| &got.senv == want);
    let shown: Vec<String> = rows.iter().map(|(g, _)| g.senv.to_string()).collect();
    (ok, shown.join(" "))
}

fn odometer_totals() -> Outcome {
    let x = SensScalar::lift(10.0, src("data.csv"), Metric::Diff);
    let mut scope = AccountantScope::new(0);
    let ((), two) = scope
        .with_odometer(OdometerKind::Pure, |s| {
            laplace(s, &x, 1.0).unwrap();
            laplace(s, &x, 1.0).unwrap();
        })
        .unwrap();
    let ((), twenty) = scope
        .with_odometer(OdometerKind::Pure, |s| {
            for _ in 0..20 {
                laplace(s, &x, 1.0).unwrap();
            }
        })
        .unwrap();
    let (a, b) = (two.to_string(), twenty.to_string());
    let ok = a == "Odometer_ε({data.csv ↦ 2.0})" && b == "Odometer_ε({data.csv ↦ 20.0})";
    (ok, format!("{a} {b}"))
}

fn filter_behaviour() -> Outcome {
    let x = SensScalar::lift(10.0, src("data.csv"), Metric::Diff);
    let mut scope = AccountantScope::new(0);
    let (results, _) = scope
        .with_filter(FilterKind::Approx { eps: 1.0, delta: 1e-5 }, |s| {
            (gauss(s, &x, 1.0, 1e-5), gauss(s, &x, 1.0, 1e-5))
        })
        .unwrap();
    let ok = results.0.is_ok() && matches!(results.1, Err(PrivacyError::FilterHalt { .. }));
    let second = match &results.1 {
        Ok(_) => "ok".to_owned(),
        Err(e) => e.name().to_owned(),
    };
    (ok, format!("first ok={}, second {second}", results.0.is_ok()))
}

fn renyi_pipeline() -> Outcome {
    let x = SensScalar::lift(10.0, src("data.csv"), Metric::Diff);
    let start = Instant::now();
    let mut scope = AccountantScope::new(0);
    let ((), odo) = scope
        .with_odometer(OdometerKind::Approx { delta_global: None }, |s| {
            s.renyi_block(1e-5, |s| {
                for _ in 0..200 {
                    renyi_gauss(s, &x, 10.0, 0.2).unwrap();
                }
            })
            .unwrap();
        })
        .unwrap();
    let elapsed = start.elapsed();
    let cost = odo.cost(&src("data.csv"));
    let ok = matches!(cost, Some(ReportedCost::EpsDelta(e, d))
        if (e - 41.28).abs() <= RENYI_TOLERANCE && d == 1e-5)
        && elapsed < Duration::from_secs(1);
    (ok, format!("{odo} in {elapsed:?}"))
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn preservation_suite() -> Outcome {
    let start = Instant::now();
    let summary = run_corpus(&corpus_dir(), CORPUS_TRIALS, 2024, EvalConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let mut caught = Vec::new();
    for m in Mutation::ALL {
        let config = EvalConfig { mutation: Some(m), ..EvalConfig::default() };
        let mutated = run_corpus(&corpus_dir(), CORPUS_TRIALS, 2024, config).unwrap();
        if mutated
            .failures()
            .any(|o| matches!(o.status, FixtureStatus::Violated | FixtureStatus::MissedError))
        {
            caught.push(m);
        }
    }
    let ok = summary.passed
        && summary.programs >= 20
        && summary.uncovered_rules.is_empty()
        && elapsed < CORPUS_BUDGET
        && caught.len() == Mutation::ALL.len();
    let failed = summary.failures().count();
    (
        ok,
        format!(
            "{} programs, {} trials, {failed} failures, uncovered {:?}, {}/5 mutations caught, {elapsed:?}",
            summary.programs,
            summary.trials,
            summary.uncovered_rules,
            caught.len()
        ),
    )
}

fn laplace_smoke() -> Outcome {
    let start = Instant::now();
    let mut scope = AccountantScope::new(42);
    let mut histogram = |value: f64| {
        let x = SensScalar::lift(value, src("d"), Metric::Diff);
        let mut bins = std::collections::BTreeMap::<i64, usize>::new();
        for _ in 0..SMOKE_SAMPLES {
            let y = laplace(&mut scope, &x, 1.0).unwrap();
            *bins.entry((y / SMOKE_BIN_WIDTH).floor() as i64).or_default() += 1;
        }
        bins
    };
    let h0 = histogram(0.0);
    let h1 = histogram(1.0);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for (bin, c0) in &h0 {
        let c1 = h1.get(bin).copied().unwrap_or(0);
        if *c0 >= SMOKE_MIN_HITS && c1 >= SMOKE_MIN_HITS {
            used += 1;
            worst = worst.max((*c0 as f64 / c1 as f64).ln().abs());
        }
    }
    let elapsed = start.elapsed();
    let ok = used > 0 && worst <= SMOKE_MAX_LOG_RATIO && elapsed < SMOKE_BUDGET;
    (ok, format!("max |log ratio| {worst:.4} over {used} bins in {elapsed:?}"))
}

fn error_gating() -> Outcome {
    let v = SensVector::lift(vec![3.0, 4.0, 0.5], src("d"));
    let total = vec_sum(&clip_l2(&v, 1.0).unwrap()).unwrap();
    let mut scope = AccountantScope::new(0);
    let lap = laplace(&mut scope, &total, 1.0);
    let gau = gauss(&mut scope, &total, 1.0, 1e-5);
    let ok = matches!(lap, Err(PrivacyError::MetricIncompatible { .. })) && gau.is_ok();
    let lap = match lap {
        Ok(_) => "ok".to_owned(),
        Err(e) => e.name().to_owned(),
    };
    (ok, format!("laplace {lap}, gauss ok={}", gau.is_ok()))
}

fn gradient_descent() -> Outcome {
    let config = GdConfig::default();
    let start = Instant::now();
    let out = dp_gradient_descent(&config);
    let elapsed = start.elapsed();
    match out {
        Ok(out) => {
            let k = out.iterations as f64;
            let expected = k * config.eps_iter + k * config.eps_acc + config.eps_count;
            let got = out.odometer.cost(&src(&config.source));
            let ok = out.noisy_accuracy > DEMO_MIN_ACCURACY
                && got == Some(ReportedCost::Renyi { alpha: config.alpha, eps: expected })
                && elapsed < DEMO_BUDGET;
            (
                ok,
                format!(
                    "accuracy {:.4} after {} iterations, {} (expected ε {expected}) in {elapsed:?}",
                    out.noisy_accuracy, out.iterations, out.odometer
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("worked example (+ x x)", worked_example),
        ("sensitivity environment addition", senv_algebra),
        ("wrapper sensitivity table", wrapper_table),
        ("odometer totals", odometer_totals),
        ("filter halts on second gauss", filter_behaviour),
        ("Renyi pipeline converts to (41.28, 1e-05)", renyi_pipeline),
        ("metric preservation corpus and mutations", preservation_suite),
        ("Laplace binned likelihood ratio", laplace_smoke),
        ("Laplace rejects L2-clipped sums", error_gating),
        ("private gradient descent demo", gradient_descent),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
