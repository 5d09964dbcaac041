use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use lmoment_core::voronoi::Status;

/// One verified statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub citation: String,
    /// Acceptance criterion this check belongs to, if any.
    pub criterion: Option<u8>,
    /// Whether the check counts toward the aggregate verdict.
    pub required: bool,
    pub status: Status,
    pub residual: f64,
    /// Passes iff `residual ≤ tolerance`.
    pub tolerance: f64,
    pub values: BTreeMap<String, f64>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub profile: String,
    pub verdict: Status,
    pub checks: Vec<CheckResult>,
}

impl SuiteResult {
    pub fn new(profile: &str, checks: Vec<CheckResult>) -> Self {
        let verdict = aggregate(&checks);
        Self { profile: profile.into(), verdict, checks }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Status::Pass
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status != Status::Pass)
    }
}

/// PASS iff no required check failed or was inconclusive.
pub fn aggregate(checks: &[CheckResult]) -> Status {
    let required = checks.iter().filter(|c| c.required);
    if required.clone().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else if required.clone().any(|c| c.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.12e}")
}

/// JSON with sorted keys and every float written as `%.12e`.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            // serde_json's default map is a BTreeMap, so keys come out sorted
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), Value::String(k.clone()));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

pub fn emit_report(result: &SuiteResult, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => Ok(canonical_json(result)?.into_bytes()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "criterion", "required", "status", "residual", "tolerance", "citation"])?;
            for c in &result.checks {
                w.write_record([
                    c.name.clone(),
                    c.criterion.map(|k| k.to_string()).unwrap_or_default(),
                    c.required.to_string(),
                    status_str(c.status).into(),
                    fmt_float(c.residual),
                    fmt_float(c.tolerance),
                    c.citation.clone(),
                ])?;
            }
            Ok(w.into_inner()?)
        }
        Format::Human => {
            let mut out = String::new();
            for c in &result.checks {
                let tag = if c.required { "" } else { " (advisory)" };
                let _ = writeln!(
                    out,
                    "{:<12} {}{tag}  residual={}  tol={}  [{}]",
                    status_str(c.status),
                    c.name,
                    fmt_float(c.residual),
                    fmt_float(c.tolerance),
                    c.citation
                );
                if let Some(d) = &c.detail {
                    let _ = writeln!(out, "             {d}");
                }
            }
            let required = result.checks.iter().filter(|c| c.required).count();
            let _ = writeln!(
                out,
                "verdict: {} ({} checks, {} required)",
                status_str(result.verdict),
                result.checks.len(),
                required
            );
            Ok(out.into_bytes())
        }
    }
}

pub fn status_str(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Inconclusive => "INCONCLUSIVE",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SuiteResult {
        let mut values = BTreeMap::new();
        values.insert("z".into(), 1.0 / 3.0);
        values.insert("a".into(), -2.5e-17);
        let c = CheckResult {
            name: "x.y".into(),
            citation: "an identity".into(),
            criterion: Some(1),
            required: true,
            status: Status::Pass,
            residual: std::f64::consts::PI * 1e-13,
            tolerance: 1e-9,
            values,
            detail: Some("quote \" and, comma".into()),
        };
        SuiteResult::new("quick", vec![c])
    }

    #[test]
    fn empty_suite_is_valid() {
        let r = SuiteResult::new("quick", vec![]);
        assert_eq!(r.verdict, Status::Pass);
        let j = String::from_utf8(emit_report(&r, Format::Json).unwrap()).unwrap();
        let back: SuiteResult = serde_json::from_str(&j).unwrap();
        assert_eq!(back.checks.len(), 0);
        let csv = String::from_utf8(emit_report(&r, Format::Csv).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let j = emit_report(&sample(), Format::Json).unwrap();
        let back: SuiteResult = serde_json::from_slice(&j).unwrap();
        assert_eq!(emit_report(&back, Format::Json).unwrap(), j);
    }

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let j = String::from_utf8(emit_report(&sample(), Format::Json).unwrap()).unwrap();
        assert!(j.contains("\"residual\": 3.141592653590e-13"));
        let a = j.find("\"a\"").unwrap();
        let z = j.find("\"z\"").unwrap();
        assert!(a < z);
        assert!(j.find("\"checks\"").unwrap() < j.find("\"profile\"").unwrap());
    }

    #[test]
    fn human_includes_citation() {
        let h = String::from_utf8(emit_report(&sample(), Format::Human).unwrap()).unwrap();
        assert!(h.contains("[an identity]"));
        assert!(h.contains("verdict: PASS"));
    }

    #[test]
    fn aggregate_ignores_advisory() {
        let mut r = sample();
        let mut adv = r.checks[0].clone();
        adv.name = "adv".into();
        adv.required = false;
        adv.status = Status::Fail;
        r.checks.push(adv);
        assert_eq!(aggregate(&r.checks), Status::Pass);
        r.checks[0].status = Status::Inconclusive;
        assert_eq!(aggregate(&r.checks), Status::Inconclusive);
        r.checks[1].required = true;
        assert_eq!(aggregate(&r.checks), Status::Fail);
    }
}
