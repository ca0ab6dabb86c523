use proptest::prelude::*;
use senstrace::model::{Metric, SourceId};
use senstrace::privacy::{
    exponential, gauss, laplace, renyi_gauss, renyi_to_ed, svt, AccountantScope, Cost, FilterKind, OdometerKind,
    PrivacyError, ReportedCost,
};
use senstrace::sens::{clip_l1, clip_l2, SensScalar, SensVector};

fn src() -> SourceId {
    SourceId::new("data.csv").unwrap()
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug)]
enum Call {
    Laplace(f64),
    Gauss(f64, f64),
}

fn call() -> impl Strategy<Value = Call> {
    prop_oneof![
        (1u32..8).prop_map(|e| Call::Laplace(e as f64 / 8.0)),
        (1u32..8, 1u32..4).prop_map(|(e, d)| Call::Gauss(e as f64 / 8.0, d as f64 * 1e-6)),
    ]
}

fn issue(scope: &mut AccountantScope, c: Call) -> Result<f64, PrivacyError> {
    let x = SensScalar::lift(10.0, src(), Metric::Diff);
    match c {
        Call::Laplace(e) => laplace(scope, &x, e),
        Call::Gauss(e, d) => gauss(scope, &x, e, d),
    }
}

fn cost_of(c: Call) -> (f64, f64) {
    match c {
        Call::Laplace(e) => (e, 0.0),
        Call::Gauss(e, d) => (e, d),
    }
}

proptest! {
    #[test]
    fn clipping_bounds_the_norm(v in prop::collection::vec(-50.0f64..50.0, 1..12), b in 0.01f64..20.0) {
        let lifted = SensVector::lift(v.clone(), src());
        let c2 = clip_l2(&lifted, b).unwrap();
        prop_assert!(l2(&c2.values) <= b * (1.0 + 1e-12));
        let c1 = clip_l1(&lifted, b).unwrap();
        prop_assert!(l1(&c1.values) <= b * (1.0 + 1e-12));
        if l2(&v) <= b {
            prop_assert_eq!(&c2.values, &v);
        }
    }

    #[test]
    fn renyi_costs_add_up(k in 1usize..60, eps in 0.01f64..1.0) {
        let mut scope = AccountantScope::new(0);
        let x = SensScalar::lift(1.0, src(), Metric::Diff);
        let ((), odo) = scope
            .with_odometer(OdometerKind::Renyi { alpha: 10.0 }, |s| {
                for _ in 0..k {
                    renyi_gauss(s, &x, 10.0, eps).unwrap();
                }
            })
            .unwrap();
        let Some(ReportedCost::Renyi { eps: total, .. }) = odo.cost(&src()) else { panic!() };
        prop_assert!((total - k as f64 * eps).abs() <= 1e-12 * k as f64);

        let (_, converted) = AccountantScope::new(0)
            .renyi_block(1e-5, |s| {
                for _ in 0..k {
                    renyi_gauss(s, &x, 10.0, eps).unwrap();
                }
            })
            .unwrap();
        let (e, d) = converted[&src()];
        let (oe, od) = renyi_to_ed(10.0, total, 1e-5).unwrap();
        prop_assert!((e - oe).abs() <= 1e-9);
        prop_assert_eq!(d, od);
    }

    #[test]
    fn filter_never_exceeds_its_budget(calls in prop::collection::vec(call(), 1..30), eps in 0.5f64..4.0) {
        let budget = (eps, 1e-5);
        let mut scope = AccountantScope::new(1);
        let h = scope.push_filter(FilterKind::Approx { eps: budget.0, delta: budget.1 }).unwrap();
        let mut accepted = (0.0, 0.0);
        let mut halted = false;
        for c in calls {
            match issue(&mut scope, c) {
                Ok(_) => {
                    prop_assert!(!halted, "a charge succeeded after a halt");
                    let (e, d) = cost_of(c);
                    accepted = (accepted.0 + e, accepted.1 + d);
                }
                Err(PrivacyError::FilterHalt { .. }) => halted = true,
                Err(e) => panic!("{e}"),
            }
        }
        prop_assert!(accepted.0 <= budget.0 + 1e-12 && accepted.1 <= budget.1 + 1e-18);
        let spent = scope.filter(h).unwrap().spent(&src());
        prop_assert!((spent.0 - accepted.0).abs() < 1e-12);
        prop_assert_eq!(scope.filter(h).unwrap().is_halted(), halted);
    }

    #[test]
    fn accounting_does_not_depend_on_the_seed(calls in prop::collection::vec(call(), 1..20), s1 in any::<u64>(), s2 in any::<u64>()) {
        let account = |seed: u64| {
            let mut scope = AccountantScope::new(seed);
            scope
                .with_odometer(OdometerKind::Approx { delta_global: None }, |s| {
                    for c in &calls {
                        issue(s, *c).unwrap();
                    }
                })
                .unwrap()
                .1
                .to_json()
        };
        prop_assert_eq!(account(s1), account(s2));
    }
}

#[test]
fn odometer_charges_are_per_source() {
    let mut scope = AccountantScope::new(0);
    let a = SensScalar::lift(1.0, SourceId::new("a").unwrap(), Metric::Diff);
    let b = SensScalar::lift(1.0, SourceId::new("b").unwrap(), Metric::Diff);
    let ((), odo) = scope
        .with_odometer(OdometerKind::Pure, |s| {
            laplace(s, &(&a + &b), 1.0).unwrap();
            laplace(s, &a, 0.5).unwrap();
            scope_charge_nothing(s);
        })
        .unwrap();
    assert_eq!(odo.to_string(), "Odometer_ε({a ↦ 1.5, b ↦ 1.0})");
}

fn scope_charge_nothing(s: &mut AccountantScope) {
    // public values cost nothing
    laplace(s, &SensScalar::constant(3.0), 1.0).unwrap();
    s.charge(Cost::Pure(1.0), &[]).unwrap();
}

#[test]
fn above_threshold_is_fair_on_a_tie() {
    // With one query equal to the threshold both noise terms are symmetric,
    // so the query is reported half of the time.
    let mut scope = AccountantScope::new(5);
    let queries = [|d: &f64| SensScalar::lift(*d, src(), Metric::Diff)];
    let n = 40_000;
    let hits = (0..n)
        .filter(|_| svt(&mut scope, &queries, &0.0, 0.0, 1.0).is_ok())
        .count();
    let p = hits as f64 / n as f64;
    assert!((p - 0.5).abs() < 0.015, "{p}");
}

#[test]
fn above_threshold_finds_the_large_query() {
    let mut scope = AccountantScope::new(6);
    let q = |k: f64| move |d: &f64| SensScalar::lift(d * k, src(), Metric::Diff);
    let queries = [q(0.0), q(0.0), q(1.0)];
    let mut third = 0;
    for _ in 0..2000 {
        if svt(&mut scope, &queries, &200.0, 100.0, 1.0) == Ok(2) {
            third += 1;
        }
    }
    assert!(third > 1900, "{third}");
}

#[test]
fn exponential_matches_its_distribution() {
    let mut scope = AccountantScope::new(9);
    let options = [0.0, 1.0, 2.0, 4.0];
    let score = |d: &f64, o: &f64| SensScalar::lift(d * o, src(), Metric::Diff);
    let n = 60_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        let pick = exponential(&mut scope, &options, score, &1.0, 1.0, 1.0).unwrap();
        counts[options.iter().position(|o| o == pick).unwrap()] += 1;
    }
    let weights: Vec<f64> = options.iter().map(|s: &f64| (s / 2.0).exp()).collect();
    let total: f64 = weights.iter().sum();
    for (c, w) in counts.iter().zip(&weights) {
        let expected = w / total;
        let observed = *c as f64 / n as f64;
        assert!((observed - expected).abs() < 0.01, "{observed} vs {expected}");
    }
}
