use proptest::prelude::*;
use senstrace::eval::{eval_entry, InputDecl, Inputs};
use senstrace::frontend::parse_program;
use senstrace::harness::{check_preservation, NeighborSpec};
use senstrace::model::{Expr, ExtReal, Metric, ProjIndex, SensEnv, SourceId};
use senstrace::sens::{s_add, s_mul, SensScalar};

fn src(s: &str) -> SourceId {
    SourceId::new(s).unwrap()
}

fn inputs() -> Inputs {
    let mut inputs = Inputs::new();
    inputs.insert("x".into(), InputDecl { value: 3.0, source: src("o"), metric: Metric::Diff });
    inputs.insert("y".into(), InputDecl { value: -5.0, source: src("p"), metric: Metric::Diff });
    inputs
}

fn constant() -> impl Strategy<Value = f64> {
    (-12i32..=12).prop_map(|n| n as f64 / 4.0)
}

fn arith() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::var("x")),
        Just(Expr::var("y")),
        constant().prop_map(Expr::real),
    ];
    leaf.prop_recursive(5, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::plus(a, b)),
            (constant(), inner.clone()).prop_map(|(c, e)| Expr::times_l(Expr::real(c), e)),
            (inner, constant()).prop_map(|(e, c)| Expr::times_r(e, Expr::real(c))),
        ]
    })
}

/// Arithmetic wrapped in binders, conditionals on literals, pairs and
/// references.
fn program() -> impl Strategy<Value = Expr> {
    arith().prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::app(Expr::lam("z", Expr::plus(Expr::var("z"), b)), a)),
            (0u8..2, inner.clone(), inner.clone())
                .prop_map(|(g, a, b)| Expr::if0(Expr::real(g as f64), a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::proj(ProjIndex::First, Expr::pair(a, b))),
            inner.clone().prop_map(|a| Expr::read(Expr::new_ref(a))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::seq(Expr::write(Expr::new_ref(b), a.clone()), a)),
        ]
    })
}

/// The same arithmetic through the library-level operators.
fn with_operators(e: &Expr) -> SensScalar {
    match e {
        Expr::Var(v) if &**v == "x" => SensScalar::lift(3.0, src("o"), Metric::Diff),
        Expr::Var(_) => SensScalar::lift(-5.0, src("p"), Metric::Diff),
        Expr::Real(r) => SensScalar::constant(*r),
        Expr::BinOp(op, a, b) => {
            let (a, b) = (with_operators(a), with_operators(b));
            match op.keyword() {
                "+" => s_add(&a, &b),
                _ => s_mul(&a, &b),
            }
        }
        other => unreachable!("not arithmetic: {other}"),
    }
}

#[test]
fn worked_example_and_wrapper_table() {
    let r = eval_entry(&inputs(), &parse_program("(+ x x)").unwrap()).unwrap();
    let t = r.value.as_tagged().unwrap();
    assert_eq!(t.senv, SensEnv::singleton(src("o"), ExtReal::new(2.0).unwrap()));

    let d = SensScalar::lift(10.0, src("d"), Metric::Diff);
    let k = |v: f64| SensEnv::singleton(src("d"), ExtReal::new(v).unwrap());
    assert_eq!((&d + &SensScalar::constant(5.0)).senv, k(1.0));
    assert_eq!((&d + &d).senv, k(2.0));
    assert_eq!((&SensScalar::constant(5.0) * &d).senv, k(5.0));
    assert_eq!((&d * &d).senv, SensEnv::singleton(src("d"), ExtReal::INFINITY));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn operators_agree_with_the_evaluator(e in arith()) {
        let core = eval_entry(&inputs(), &e).unwrap();
        let core = core.value.as_tagged().unwrap();
        let lib = with_operators(&e);
        prop_assert_eq!(core.value.to_bits(), lib.value.to_bits());
        prop_assert_eq!(&core.senv, &lib.senv);
    }

    #[test]
    fn printed_programs_parse_back(e in program()) {
        prop_assert_eq!(parse_program(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn random_programs_preserve_metrics(e in program(), seed in any::<u64>()) {
        let mut distance = SensEnv::zero();
        distance.set(src("o"), ExtReal::ONE);
        distance.set(src("p"), ExtReal::new(0.5).unwrap());
        let spec = NeighborSpec::new(inputs(), distance).unwrap();
        let report = check_preservation(&e, &spec, 30, seed).unwrap();
        prop_assert!(report.passed(), "{:#?}", report);
    }
}
