//! Run reports: a deterministic, replayable record of one command. Floats
//! are serialized with 17 significant digits so every value round-trips
//! bit-faithfully; identical (command, inputs, seed, version) produce
//! byte-identical JSON.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::quad::ValueWithError;

/// A float as a JSON number with 17 significant digits. Non-finite values
/// have no JSON number form and become tagged strings.
pub fn num17(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(
            if x.is_nan() {
                "nan"
            } else if x > 0.0 {
                "inf"
            } else {
                "-inf"
            }
            .to_string(),
        );
    }
    let text = format!("{:.16e}", x);
    match serde_json::from_str::<serde_json::Number>(&text) {
        Ok(n) => Value::Number(n),
        Err(_) => Value::String(text),
    }
}

pub fn vec17(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num17(x)).collect())
}

/// {value, std_error, samples, status} with 17-digit numbers.
pub fn value_with_error_json(v: &ValueWithError) -> Value {
    let mut m = Map::new();
    m.insert("value".into(), num17(v.value));
    m.insert("std_error".into(), num17(v.std_error));
    m.insert(
        "samples".into(),
        Value::Number(serde_json::Number::from(v.samples_used)),
    );
    m.insert(
        "status".into(),
        serde_json::to_value(v.status).unwrap_or(Value::Null),
    );
    Value::Object(m)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    /// Echo of the parsed input specs, keyed by flag name.
    pub inputs: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    pub seed: u64,
    /// Seconds; excluded from serialization so reports stay byte-identical
    /// across replays.
    #[serde(skip)]
    pub wall_time: f64,
    pub version: String,
}

impl RunReport {
    pub fn new(command: impl Into<String>, seed: u64, version: impl Into<String>) -> RunReport {
        RunReport {
            command: command.into(),
            inputs: BTreeMap::new(),
            results: BTreeMap::new(),
            seed,
            wall_time: 0.0,
            version: version.into(),
        }
    }

    pub fn input(&mut self, key: impl Into<String>, value: Value) -> &mut Self {
        self.inputs.insert(key.into(), value);
        self
    }

    pub fn result(&mut self, key: impl Into<String>, value: Value) -> &mut Self {
        self.results.insert(key.into(), value);
        self
    }

    pub fn result_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.result(key, num17(value))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    /// Flat key,value rows; nested objects and arrays flatten with dotted
    /// and indexed keys. Strings are quoted only when they contain commas.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("command".into(), self.command.clone()),
            ("seed".into(), self.seed.to_string()),
            ("version".into(), self.version.clone()),
        ];
        for (k, v) in &self.inputs {
            flatten_into(&mut rows, &format!("inputs.{k}"), v);
        }
        for (k, v) in &self.results {
            flatten_into(&mut rows, &format!("results.{k}"), v);
        }
        let mut out = String::from("key,value\n");
        for (k, v) in rows {
            let quoted = if v.contains(',') || v.contains('"') {
                format!("\"{}\"", v.replace('"', "\"\""))
            } else {
                v
            };
            out.push_str(&format!("{k},{quoted}\n"));
        }
        out
    }
}

fn flatten_into(rows: &mut Vec<(String, String)>, key: &str, value: &Value) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten_into(rows, &format!("{key}.{k}"), v);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_into(rows, &format!("{key}[{i}]"), v);
            }
        }
        Value::String(s) => rows.push((key.to_string(), s.clone())),
        Value::Number(n) => rows.push((key.to_string(), n.to_string())),
        Value::Bool(b) => rows.push((key.to_string(), b.to_string())),
        Value::Null => rows.push((key.to_string(), String::new())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digit_round_trip() {
        for &x in &[
            std::f64::consts::PI,
            1.0 / 3.0,
            -2.2250738585072014e-308,
            6.02214076e23,
            0.1 + 0.2,
        ] {
            let v = num17(x);
            let text = serde_json::to_string(&v).unwrap();
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{text}");
            // 17 significant digits: mantissa has 16 digits after the point
            assert!(text.contains('e') || text.contains('E'), "{text}");
        }
        assert_eq!(num17(f64::INFINITY), Value::String("inf".into()));
        assert_eq!(num17(f64::NAN), Value::String("nan".into()));
    }

    #[test]
    fn report_is_deterministic_and_skips_wall_time() {
        let build = || {
            let mut r = RunReport::new("volume", 7, "0.1.0");
            r.input("body", serde_json::json!({"type":"cube","n":2,"half_side":1.0}));
            r.result_f64("volume", 4.0000000001);
            r
        };
        let mut a = build();
        a.wall_time = 1.23;
        let mut b = build();
        b.wall_time = 99.0;
        assert_eq!(a.to_json(), b.to_json());
        assert!(!a.to_json().contains("wall_time"));
    }

    #[test]
    fn csv_flattens_nested_results() {
        let mut r = RunReport::new("moment", 0, "0.1.0");
        r.result(
            "moment",
            serde_json::json!({"value": 1.5, "direction": [0.0, 1.0]}),
        );
        let csv = r.to_csv();
        assert!(csv.contains("results.moment.value,1.5"));
        assert!(csv.contains("results.moment.direction[1],1"));
        assert!(csv.starts_with("key,value\n"));
    }
}
