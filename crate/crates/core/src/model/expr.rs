use std::fmt;
use std::sync::Arc;

/// Variable name.
pub type Name = Arc<str>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Plus,
    /// `e ⋉ e`: the left operand is the non-sensitive scalar.
    TimesL,
    /// `e ⋊ e`: the right operand is the non-sensitive scalar.
    TimesR,
}

impl BinOp {
    pub fn keyword(self) -> &'static str {
        match self {
            BinOp::Plus => "+",
            BinOp::TimesL => "scalel",
            BinOp::TimesR => "scaler",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProjIndex {
    First,
    Second,
}

impl ProjIndex {
    pub fn from_number(n: u64) -> Option<ProjIndex> {
        match n {
            1 => Some(ProjIndex::First),
            2 => Some(ProjIndex::Second),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            ProjIndex::First => 1,
            ProjIndex::Second => 2,
        }
    }
}

/// Core-language expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(Name),
    Real(f64),
    BinOp(BinOp, Arc<Expr>, Arc<Expr>),
    If0(Arc<Expr>, Arc<Expr>, Arc<Expr>),
    Pair(Arc<Expr>, Arc<Expr>),
    Proj(ProjIndex, Arc<Expr>),
    Lam(Name, Arc<Expr>),
    App(Arc<Expr>, Arc<Expr>),
    Ref(Arc<Expr>),
    Read(Arc<Expr>),
    Write(Arc<Expr>, Arc<Expr>),
}

// Small constructors, mostly for tests and programmatic program building.
impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(Arc::from(name))
    }

    pub fn real(r: f64) -> Expr {
        Expr::Real(r)
    }

    pub fn plus(a: Expr, b: Expr) -> Expr {
        Expr::BinOp(BinOp::Plus, Arc::new(a), Arc::new(b))
    }

    pub fn times_l(a: Expr, b: Expr) -> Expr {
        Expr::BinOp(BinOp::TimesL, Arc::new(a), Arc::new(b))
    }

    pub fn times_r(a: Expr, b: Expr) -> Expr {
        Expr::BinOp(BinOp::TimesR, Arc::new(a), Arc::new(b))
    }

    pub fn if0(guard: Expr, then: Expr, otherwise: Expr) -> Expr {
        Expr::If0(Arc::new(guard), Arc::new(then), Arc::new(otherwise))
    }

    pub fn pair(a: Expr, b: Expr) -> Expr {
        Expr::Pair(Arc::new(a), Arc::new(b))
    }

    pub fn proj(index: ProjIndex, e: Expr) -> Expr {
        Expr::Proj(index, Arc::new(e))
    }

    pub fn lam(param: &str, body: Expr) -> Expr {
        Expr::Lam(Arc::from(param), Arc::new(body))
    }

    pub fn app(f: Expr, arg: Expr) -> Expr {
        Expr::App(Arc::new(f), Arc::new(arg))
    }

    pub fn new_ref(e: Expr) -> Expr {
        Expr::Ref(Arc::new(e))
    }

    pub fn read(e: Expr) -> Expr {
        Expr::Read(Arc::new(e))
    }

    pub fn write(target: Expr, value: Expr) -> Expr {
        Expr::Write(Arc::new(target), Arc::new(value))
    }

    /// `e1; e2` encoded as `(λ_. e2)(e1)`.
    pub fn seq(first: Expr, second: Expr) -> Expr {
        Expr::app(Expr::lam("_", second), first)
    }

    pub fn mentions_var(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            Expr::Real(_) => false,
            Expr::Lam(_, body) => body.mentions_var(),
            Expr::Proj(_, e) | Expr::Ref(e) | Expr::Read(e) => e.mentions_var(),
            Expr::BinOp(_, a, b) | Expr::Pair(a, b) | Expr::App(a, b) | Expr::Write(a, b) => {
                a.mentions_var() || b.mentions_var()
            }
            Expr::If0(g, t, e) => g.mentions_var() || t.mentions_var() || e.mentions_var(),
        }
    }
}

/// Canonical s-expression form; `parse_program` reads it back.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(x) => f.write_str(x),
            Expr::Real(r) => write!(f, "{r}"),
            Expr::BinOp(op, a, b) => write!(f, "({} {a} {b})", op.keyword()),
            Expr::If0(g, t, e) => write!(f, "(if0 {g} {t} {e})"),
            Expr::Pair(a, b) => write!(f, "(pair {a} {b})"),
            Expr::Proj(i, e) => write!(f, "(proj {} {e})", i.number()),
            Expr::Lam(x, body) => write!(f, "(lam {x} {body})"),
            Expr::App(a, b) => write!(f, "(app {a} {b})"),
            Expr::Ref(e) => write!(f, "(ref {e})"),
            Expr::Read(e) => write!(f, "(read {e})"),
            Expr::Write(a, b) => write!(f, "(write {a} {b})"),
        }
    }
}
