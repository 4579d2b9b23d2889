// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::config::Format;

/// JSON has no infinities or NaN; those are written as strings.
mod num {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| serde::de::Error::custom("bad number")),
            Value::String(s) => match s.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("bad number {other:?}"))),
            },
            other => Err(serde::de::Error::custom(format!(
                "expected number, got {other}"
            ))),
        }
    }

    pub fn to_string(v: f64) -> String {
        match serde_json::to_value(Wrap(v)).expect("serializable") {
            Value::String(s) => s,
            other => other.to_string(),
        }
    }

    #[derive(Serialize)]
    struct Wrap(#[serde(with = "self")] f64);
}

/// One verified quantity. `slack >= 0` means the check passed with room to
/// spare; the sign convention is fixed by the constructor used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub inputs: BTreeMap<String, Value>,
    #[serde(with = "num")]
    pub value: f64,
    #[serde(with = "num")]
    pub bound: f64,
    #[serde(with = "num")]
    pub tolerance: f64,
    #[serde(with = "num")]
    pub slack: f64,
    pub passed: bool,
    pub wall_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

pub type Inputs = BTreeMap<String, Value>;

#[macro_export]
macro_rules! inputs {
    ($($k:expr => $v:expr),* $(,)?) => {{
        #[allow(unused_mut)]
        let mut m = $crate::report::Inputs::new();
        $(m.insert($k.to_string(), serde_json::json!($v));)*
        m
    }};
}

impl Check {
    fn base(
        id: &str,
        inputs: Inputs,
        value: f64,
        bound: f64,
        tolerance: f64,
        slack: f64,
        passed: bool,
    ) -> Self {
        Self {
            id: id.to_string(),
            inputs,
            value,
            bound,
            tolerance,
            slack,
            passed,
            wall_time: None,
            detail: None,
        }
    }

    /// Passes when `value <= bound`.
    pub fn at_most(id: &str, inputs: Inputs, value: f64, bound: f64, tolerance: f64) -> Self {
        Self::base(
            id,
            inputs,
            value,
            bound,
            tolerance,
            bound - value,
            value <= bound,
        )
    }

    /// Passes when `value >= bound`.
    pub fn at_least(id: &str, inputs: Inputs, value: f64, bound: f64, tolerance: f64) -> Self {
        Self::base(
            id,
            inputs,
            value,
            bound,
            tolerance,
            value - bound,
            value >= bound,
        )
    }

    /// Passes when `value > bound`.
    pub fn above(id: &str, inputs: Inputs, value: f64, bound: f64) -> Self {
        Self::base(id, inputs, value, bound, 0.0, value - bound, value > bound)
    }

    /// A check that could not be evaluated.
    pub fn error(id: &str, inputs: Inputs, message: impl std::fmt::Display) -> Self {
        let mut c = Self::base(id, inputs, f64::NAN, f64::NAN, 0.0, f64::NAN, false);
        c.detail = Some(serde_json::json!({ "error": message.to_string() }));
        c
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

/// Runs `f` and stamps the elapsed time on every check it returns.
pub fn timed(f: impl FnOnce() -> Vec<Check>) -> Vec<Check> {
    let start = Instant::now();
    let mut checks = f();
    let each = start.elapsed().as_secs_f64() / checks.len().max(1) as f64;
    for c in &mut checks {
        c.wall_time = Some(each);
    }
    checks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str, config: Value, checks: Vec<Check>, wall_time: f64) -> Self {
        let passed = checks.iter().filter(|c| c.passed).count();
        Self {
            command: command.to_string(),
            config,
            timestamp: None,
            summary: Summary {
                passed,
                failed: checks.len() - passed,
                wall_time: Some(wall_time),
            },
            checks,
        }
    }

    /// Stamps the current time, or strips every timing field for
    /// byte-reproducible output.
    pub fn finalize(&mut self, timestamp: bool) {
        if timestamp {
            self.timestamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs());
        } else {
            self.timestamp = None;
            self.summary.wall_time = None;
            for c in &mut self.checks {
                c.wall_time = None;
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// Concatenates reports in the given order and recomputes the summary.
    pub fn merge(reports: Vec<Report>) -> Report {
        let configs: Vec<Value> = reports
            .iter()
            .map(|r| serde_json::json!({ "command": r.command, "config": r.config }))
            .collect();
        let wall: Option<f64> = reports.iter().map(|r| r.summary.wall_time).sum();
        let checks: Vec<Check> = reports.into_iter().flat_map(|r| r.checks).collect();
        let mut merged = Report::new("report-merge", Value::Array(configs), checks, 0.0);
        merged.summary.wall_time = wall;
        merged
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record([
                    "id",
                    "inputs",
                    "value",
                    "bound",
                    "tolerance",
                    "slack",
                    "passed",
                    "wall_time",
                ])?;
                for c in &self.checks {
                    w.write_record([
                        c.id.clone(),
                        serde_json::to_string(&c.inputs)?,
                        num::to_string(c.value),
                        num::to_string(c.bound),
                        num::to_string(c.tolerance),
                        num::to_string(c.slack),
                        c.passed.to_string(),
                        c.wall_time.map(num::to_string).unwrap_or_default(),
                    ])?;
                }
                w.flush()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_values_round_trip() {
        let c = Check::error("x", inputs! {"beta" => 1.0}, "boom");
        let text = serde_json::to_string(&c).unwrap();
        let back: Check = serde_json::from_str(&text).unwrap();
        assert!(back.value.is_nan());
        assert!(!back.passed);
        let c = Check::at_most("y", Inputs::new(), f64::INFINITY, 1.0, 0.0);
        let back: Check = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.value, f64::INFINITY);
        assert_eq!(back.slack, f64::NEG_INFINITY);
    }

    #[test]
    fn summary_and_merge() {
        let a = Report::new(
            "verify",
            Value::Null,
            vec![Check::at_most("a", Inputs::new(), 0.5, 1.0, 0.0)],
            1.0,
        );
        let b = Report::new(
            "verify",
            Value::Null,
            vec![Check::above("b", Inputs::new(), 1.0, 1.0)],
            2.0,
        );
        assert!(a.all_passed());
        assert!(!b.all_passed());
        let m = Report::merge(vec![a, b]);
        assert_eq!((m.summary.passed, m.summary.failed), (1, 1));
        assert_eq!(m.checks[0].id, "a");
        assert_eq!(m.summary.wall_time, Some(3.0));
    }

    #[test]
    fn csv_projection() {
        let r = Report::new(
            "verify",
            Value::Null,
            vec![Check::at_most("a", inputs! {"m" => 1}, 0.25, 1.0, 0.5)],
            0.0,
        );
        let mut buf = Vec::new();
        r.write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("id,inputs,value"));
        assert!(text.contains("a,\"{\"\"m\"\":1}\",0.25,1.0,0.5,0.75,true,"));
    }
}
