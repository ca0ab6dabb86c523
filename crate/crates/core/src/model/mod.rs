//! Domain types of the core language: extended reals, sensitivity
//! environments, metrics, expressions and runtime values.

mod expr;
mod ext_real;
mod metric;
mod senv;
mod value;

pub use expr::{BinOp, Expr, Name, ProjIndex};
pub use ext_real::ExtReal;
pub use metric::{within_distance, Metric, UnknownMetric};
pub use senv::{truncate, SensEnv, SourceId, SourceIdError};
pub use value::{Closure, Env, Store, TaggedReal, Value};
