use serde_json::Value;

use crate::model::ExtReal;

/// Integral values become JSON integers so `2.0` prints as `2`.
pub(crate) fn number_json(x: f64) -> Value {
    if x.is_finite() && x.fract() == 0.0 && x.abs() < 9.0e15 {
        Value::from(x as i64)
    } else {
        serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
    }
}

/// Finite sensitivities as numbers, infinity as the string `"inf"`.
pub(crate) fn ext_real_json(x: ExtReal) -> Value {
    if x.is_infinite() {
        Value::from("inf")
    } else {
        number_json(x.get())
    }
}
