use std::collections::BTreeMap;
use std::fmt;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};

use crate::eval::{EvalResult, InputDecl, Inputs};
use crate::json::ext_real_json;
use crate::model::{Metric, SourceId, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InputsError {
    #[error("malformed inputs document: {0}")]
    Malformed(String),
    #[error("input `{0}` is declared more than once")]
    DuplicateName(String),
    #[error("unknown metric {metric:?} for input `{name}` (expected \"diff\" or \"disc\")")]
    UnknownMetric { name: String, metric: String },
    #[error("invalid source for input `{name}`: {reason}")]
    InvalidSource { name: String, reason: String },
    #[error("input `{0}` is not a valid identifier")]
    InvalidName(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    value: f64,
    source: String,
    metric: String,
}

/// Keeps every entry so duplicate keys can be reported.
struct Entries(Vec<(String, RawInput)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = Entries;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object mapping input names to declarations")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, RawInput>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

/// Reads an inputs document:
/// `{"x": {"value": 21, "source": "o", "metric": "diff"}}`.
pub fn parse_inputs(text: &str) -> Result<Inputs, InputsError> {
    let Entries(entries) = serde_json::from_str(text).map_err(|e| InputsError::Malformed(e.to_string()))?;
    inputs_from_entries(entries)
}

/// Same as [`parse_inputs`] for an already-parsed JSON value.
pub fn inputs_from_json(value: &serde_json::Value) -> Result<Inputs, InputsError> {
    let Entries(entries) = Entries::deserialize(value).map_err(|e| InputsError::Malformed(e.to_string()))?;
    inputs_from_entries(entries)
}

fn inputs_from_entries(entries: Vec<(String, RawInput)>) -> Result<Inputs, InputsError> {
    let mut inputs = Inputs::new();
    for (name, raw) in entries {
        if crate::frontend::parse_program(&name) != Ok(crate::model::Expr::var(&name)) {
            return Err(InputsError::InvalidName(name));
        }
        let metric = match raw.metric.as_str() {
            "diff" => Metric::Diff,
            "disc" => Metric::Disc,
            _ => {
                return Err(InputsError::UnknownMetric {
                    name,
                    metric: raw.metric,
                })
            }
        };
        let source = SourceId::new(&raw.source).map_err(|e| InputsError::InvalidSource {
            name: name.clone(),
            reason: e.to_string(),
        })?;
        if inputs.contains_key(&name) {
            return Err(InputsError::DuplicateName(name));
        }
        inputs.insert(
            name,
            InputDecl {
                value: raw.value,
                source,
                metric,
            },
        );
    }
    Ok(inputs)
}

#[derive(Serialize)]
struct ResultDoc {
    value: String,
    senv: BTreeMap<String, serde_json::Value>,
    metric: Option<&'static str>,
    steps: u64,
}

/// JSON document for an evaluation result. Infinite sensitivities are
/// written as the string `"inf"`; non-base results have an empty `senv` and a
/// `null` metric.
pub fn render_result(result: &EvalResult) -> String {
    serde_json::to_string(&result_doc(result)).expect("result documents always serialize")
}

pub fn result_json(result: &EvalResult) -> serde_json::Value {
    serde_json::to_value(result_doc(result)).expect("result documents always serialize")
}

fn result_doc(result: &EvalResult) -> ResultDoc {
    match &result.value {
        Value::Tagged(t) => ResultDoc {
            value: t.value.to_string(),
            senv: t
                .senv
                .iter()
                .map(|(s, v)| (s.to_string(), ext_real_json(v)))
                .collect(),
            metric: Some(t.metric.name()),
            steps: result.steps,
        },
        other => ResultDoc {
            value: other.to_string(),
            senv: BTreeMap::new(),
            metric: None,
            steps: result.steps,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ExtReal, SensEnv, Store};

    #[test]
    fn parses_declarations() {
        let inputs = parse_inputs(r#"{"x":{"value":21,"source":"o","metric":"diff"}}"#).unwrap();
        let x = &inputs["x"];
        assert_eq!(x.value, 21.0);
        assert_eq!(x.source.as_str(), "o");
        assert_eq!(x.metric, Metric::Diff);
        assert!(parse_inputs("{}").unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(
            parse_inputs(r#"{"x":{"value":1,"source":"o","metric":"L7"}}"#),
            Err(InputsError::UnknownMetric { .. })
        ));
        assert!(matches!(
            parse_inputs(r#"{"x":{"value":1,"source":"o","metric":"diff"},"x":{"value":2,"source":"o","metric":"diff"}}"#),
            Err(InputsError::DuplicateName(n)) if n == "x"
        ));
        assert!(matches!(parse_inputs("[1,2]"), Err(InputsError::Malformed(_))));
        assert!(matches!(parse_inputs("{"), Err(InputsError::Malformed(_))));
        assert!(matches!(
            parse_inputs(r#"{"x":{"value":1,"source":"","metric":"diff"}}"#),
            Err(InputsError::InvalidSource { .. })
        ));
        assert!(matches!(
            parse_inputs(r#"{"if0":{"value":1,"source":"o","metric":"diff"}}"#),
            Err(InputsError::InvalidName(_))
        ));
        assert!(matches!(
            parse_inputs(r#"{"x":{"value":1,"source":"o","metric":"diff","extra":0}}"#),
            Err(InputsError::Malformed(_))
        ));
    }

    fn result(value: Value, steps: u64) -> EvalResult {
        EvalResult { store: Store::new(), value, steps }
    }

    #[test]
    fn renders_results() {
        let o = SourceId::new("o").unwrap();
        let v = Value::tagged(42.0, SensEnv::singleton(o.clone(), ExtReal::new(2.0).unwrap()), Metric::Diff);
        assert_eq!(
            render_result(&result(v, 0)),
            r#"{"value":"42","senv":{"o":2},"metric":"diff","steps":0}"#
        );
        assert_eq!(
            render_result(&result(Value::literal(5.0), 0)),
            r#"{"value":"5","senv":{},"metric":"disc","steps":0}"#
        );
        let inf = Value::tagged(1.0, SensEnv::singleton(o, ExtReal::INFINITY), Metric::Diff);
        assert_eq!(
            render_result(&result(inf, 3)),
            r#"{"value":"1","senv":{"o":"inf"},"metric":"diff","steps":3}"#
        );
        assert_eq!(
            render_result(&result(Value::Loc(2), 0)),
            r#"{"value":"loc(2)","senv":{},"metric":null,"steps":0}"#
        );
    }
}
