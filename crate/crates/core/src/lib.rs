//! Dynamic sensitivity analysis for a small core language, a sensitivity
//! wrapper layer for host scalars and vectors, and a differential-privacy
//! runtime with mechanisms, odometers and filters.

pub mod eval;
pub mod frontend;
pub mod harness;
mod json;
pub mod model;
pub mod privacy;
pub mod sens;
