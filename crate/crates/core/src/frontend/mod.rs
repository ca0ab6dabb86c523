//! Text formats: the s-expression surface syntax, input declarations and
//! result documents.

mod io;
mod parse;

pub use io::{inputs_from_json, parse_inputs, render_result, result_json, InputsError};
pub use parse::{parse_program, ParseError, SourceSpan, MAX_NESTING};
