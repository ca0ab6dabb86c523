use std::sync::Arc;

use super::{EvalConfig, EvalError, EvalResult, Mutation, Rule, RuleCoverage};
use crate::model::{
    BinOp, Closure, Env, Expr, ExtReal, ProjIndex, Store, TaggedReal, Value,
};

enum Control {
    Eval(Arc<Expr>, Env),
    Return(Value),
}

enum Frame {
    BinRhs { op: BinOp, rhs: Arc<Expr>, env: Env },
    BinApply { op: BinOp, lhs: TaggedReal },
    Branch { then: Arc<Expr>, otherwise: Arc<Expr>, env: Env },
    PairRhs { rhs: Arc<Expr>, env: Env },
    PairBuild { lhs: Value },
    Proj(ProjIndex),
    Alloc,
    Deref,
    WriteRhs { rhs: Arc<Expr>, env: Env },
    WriteApply { loc: usize },
    AppArg { arg: Arc<Expr>, env: Env },
    AppCall { func: Arc<Closure> },
    /// Marks an active function body.
    Return,
}

/// Runs programs and accumulates rule coverage across runs.
#[derive(Debug, Default)]
pub struct Evaluator {
    config: EvalConfig,
    coverage: RuleCoverage,
}

fn expect_real(value: Value) -> Result<TaggedReal, EvalError> {
    match value {
        Value::Tagged(t) => Ok(t),
        other => Err(EvalError::TypeMismatch {
            expected: "real",
            got: other.kind(),
        }),
    }
}

fn expect_loc(value: &Value) -> Result<usize, EvalError> {
    match value {
        Value::Loc(l) => Ok(*l),
        other => Err(EvalError::TypeMismatch {
            expected: "location",
            got: other.kind(),
        }),
    }
}

impl Evaluator {
    pub fn new(config: EvalConfig) -> Evaluator {
        Evaluator {
            config,
            coverage: RuleCoverage::default(),
        }
    }

    pub fn config(&self) -> &EvalConfig {
        &self.config
    }

    pub fn coverage(&self) -> &RuleCoverage {
        &self.coverage
    }

    fn mutated(&self, m: Mutation) -> bool {
        self.config.mutation == Some(m)
    }

    pub fn eval(&mut self, env: &Env, store: Store, expr: &Expr) -> Result<EvalResult, EvalError> {
        let mut store = store;
        let mut stack: Vec<Frame> = Vec::new();
        let mut steps: u64 = 0;
        let mut control = Control::Eval(Arc::new(expr.clone()), env.clone());
        let max_depth = self.config.max_depth;
        let push = |stack: &mut Vec<Frame>, frame: Frame| {
            if stack.len() >= max_depth {
                Err(EvalError::DepthExceeded(max_depth))
            } else {
                stack.push(frame);
                Ok(())
            }
        };

        loop {
            let value = match control {
                Control::Return(v) => v,
                Control::Eval(expr, env) => match &*expr {
                    Expr::Var(x) => {
                        let v = env
                            .lookup(x)
                            .cloned()
                            .ok_or_else(|| EvalError::UnboundVariable(x.to_string()))?;
                        self.coverage.fire(Rule::Var);
                        v
                    }
                    Expr::Real(r) => {
                        self.coverage.fire(Rule::Real);
                        Value::literal(*r)
                    }
                    Expr::Lam(param, body) => {
                        self.coverage.fire(Rule::Fun);
                        Value::Closure(Arc::new(Closure {
                            param: param.clone(),
                            body: body.clone(),
                            env,
                        }))
                    }
                    Expr::BinOp(op, lhs, rhs) => {
                        push(&mut stack, Frame::BinRhs { op: *op, rhs: rhs.clone(), env: env.clone() })?;
                        control = Control::Eval(lhs.clone(), env);
                        continue;
                    }
                    Expr::If0(guard, then, otherwise) => {
                        push(
                            &mut stack,
                            Frame::Branch {
                                then: then.clone(),
                                otherwise: otherwise.clone(),
                                env: env.clone(),
                            },
                        )?;
                        control = Control::Eval(guard.clone(), env);
                        continue;
                    }
                    Expr::Pair(lhs, rhs) => {
                        push(&mut stack, Frame::PairRhs { rhs: rhs.clone(), env: env.clone() })?;
                        control = Control::Eval(lhs.clone(), env);
                        continue;
                    }
                    Expr::Proj(index, e) => {
                        push(&mut stack, Frame::Proj(*index))?;
                        control = Control::Eval(e.clone(), env);
                        continue;
                    }
                    Expr::Ref(e) => {
                        push(&mut stack, Frame::Alloc)?;
                        control = Control::Eval(e.clone(), env);
                        continue;
                    }
                    Expr::Read(e) => {
                        push(&mut stack, Frame::Deref)?;
                        control = Control::Eval(e.clone(), env);
                        continue;
                    }
                    Expr::Write(target, rhs) => {
                        push(&mut stack, Frame::WriteRhs { rhs: rhs.clone(), env: env.clone() })?;
                        control = Control::Eval(target.clone(), env);
                        continue;
                    }
                    Expr::App(func, arg) => {
                        push(&mut stack, Frame::AppArg { arg: arg.clone(), env: env.clone() })?;
                        control = Control::Eval(func.clone(), env);
                        continue;
                    }
                },
            };

            let Some(frame) = stack.pop() else {
                return Ok(EvalResult { store, value, steps });
            };

            control = match frame {
                Frame::BinRhs { op, rhs, env } => {
                    let lhs = expect_real(value)?;
                    if op == BinOp::TimesL && !lhs.senv.is_zero() && !self.mutated(Mutation::SkipScalarCheck) {
                        return Err(EvalError::SensitiveScalar { senv: lhs.senv });
                    }
                    push(&mut stack, Frame::BinApply { op, lhs })?;
                    Control::Eval(rhs, env)
                }
                Frame::BinApply { op, lhs } => {
                    let rhs = expect_real(value)?;
                    Control::Return(Value::Tagged(self.binop(op, lhs, rhs)?))
                }
                Frame::Branch { then, otherwise, env } => {
                    let guard = expect_real(value)?;
                    if !guard.senv.is_zero() && !self.mutated(Mutation::SkipGuardCheck) {
                        return Err(EvalError::SensitiveGuard { senv: guard.senv });
                    }
                    if guard.value == 0.0 {
                        self.coverage.fire(Rule::IfZeroTrue);
                        Control::Eval(then, env)
                    } else {
                        self.coverage.fire(Rule::IfZeroFalse);
                        Control::Eval(otherwise, env)
                    }
                }
                Frame::PairRhs { rhs, env } => {
                    push(&mut stack, Frame::PairBuild { lhs: value })?;
                    Control::Eval(rhs, env)
                }
                Frame::PairBuild { lhs } => {
                    self.coverage.fire(Rule::Pair);
                    Control::Return(Value::pair(lhs, value))
                }
                Frame::Proj(index) => match value {
                    Value::Pair(a, b) => {
                        self.coverage.fire(Rule::Proj);
                        let picked = match index {
                            ProjIndex::First => a,
                            ProjIndex::Second => b,
                        };
                        Control::Return(Arc::unwrap_or_clone(picked))
                    }
                    other => {
                        return Err(EvalError::TypeMismatch {
                            expected: "pair",
                            got: other.kind(),
                        })
                    }
                },
                Frame::Alloc => {
                    self.coverage.fire(Rule::Ref);
                    Control::Return(Value::Loc(store.alloc(value)))
                }
                Frame::Deref => {
                    let loc = expect_loc(&value)?;
                    let v = store.get(loc).cloned().ok_or(EvalError::DanglingLocation(loc))?;
                    self.coverage.fire(Rule::Read);
                    Control::Return(v)
                }
                Frame::WriteRhs { rhs, env } => {
                    let loc = expect_loc(&value)?;
                    push(&mut stack, Frame::WriteApply { loc })?;
                    Control::Eval(rhs, env)
                }
                Frame::WriteApply { loc } => {
                    if !store.write(loc, value.clone()) {
                        return Err(EvalError::DanglingLocation(loc));
                    }
                    self.coverage.fire(Rule::Write);
                    Control::Return(value)
                }
                Frame::AppArg { arg, env } => match value {
                    Value::Closure(func) => {
                        push(&mut stack, Frame::AppCall { func })?;
                        Control::Eval(arg, env)
                    }
                    other => {
                        return Err(EvalError::TypeMismatch {
                            expected: "closure",
                            got: other.kind(),
                        })
                    }
                },
                Frame::AppCall { func } => {
                    self.coverage.fire(Rule::App);
                    steps += 1;
                    push(&mut stack, Frame::Return)?;
                    let env = func.env.extend(func.param.clone(), value);
                    Control::Eval(func.body.clone(), env)
                }
                Frame::Return => Control::Return(value),
            };
        }
    }

    fn binop(&mut self, op: BinOp, lhs: TaggedReal, rhs: TaggedReal) -> Result<TaggedReal, EvalError> {
        match op {
            BinOp::Plus => {
                self.coverage.fire(Rule::Plus);
                let senv = if self.mutated(Mutation::DropPlusSenv) {
                    lhs.senv
                } else {
                    lhs.senv.add(&rhs.senv)
                };
                let metric = if self.mutated(Mutation::WrongJoin) {
                    lhs.metric.meet(rhs.metric)
                } else {
                    lhs.metric.join(rhs.metric)
                };
                Ok(TaggedReal::new(lhs.value + rhs.value, senv, metric))
            }
            BinOp::TimesL => {
                // the scalar side was checked when it was produced
                self.coverage.fire(Rule::TimesL);
                let senv = if self.mutated(Mutation::WrongTimesScaling) {
                    rhs.senv
                } else {
                    rhs.senv.scale(ExtReal::abs_of(lhs.value))
                };
                Ok(TaggedReal::new(lhs.value * rhs.value, senv, rhs.metric))
            }
            BinOp::TimesR => {
                if !rhs.senv.is_zero() && !self.mutated(Mutation::SkipScalarCheck) {
                    return Err(EvalError::SensitiveScalar { senv: rhs.senv });
                }
                self.coverage.fire(Rule::TimesR);
                let senv = if self.mutated(Mutation::WrongTimesScaling) {
                    lhs.senv
                } else {
                    lhs.senv.scale(ExtReal::abs_of(rhs.value))
                };
                Ok(TaggedReal::new(lhs.value * rhs.value, senv, lhs.metric))
            }
        }
    }
}
