//! Report assembly and rendering.

use serde_json::{json, Map, Value};

use dcube::battery::{CheckResult, Status};

/// Exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    HypothesesUnmet,
    InputError,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::HypothesesUnmet => 2,
            Outcome::InputError => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::HypothesesUnmet => "hypotheses_unmet",
            Outcome::InputError => "input_error",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// A finished command: its outcome and a JSON body.
pub struct Report {
    pub outcome: Outcome,
    pub body: Value,
}

impl Report {
    pub fn new(outcome: Outcome, body: Value) -> Self {
        Report { outcome, body }
    }

    pub fn checks(checks: Vec<CheckResult>, extra: Value) -> Self {
        let failed = checks.iter().any(|c| c.status == Status::Fail);
        let mut body = match extra {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        body.insert("checks".into(), json!(checks));
        Report::new(Outcome::from_bool(!failed), Value::Object(body))
    }
}

/// The full JSON document printed on stdout.
pub fn document(command: &[String], report: &Report) -> Value {
    let mut doc = Map::new();
    doc.insert("command".into(), json!(command));
    doc.insert("status".into(), json!(report.outcome.label()));
    doc.insert("exit_code".into(), json!(report.outcome.code()));
    if let Value::Object(m) = &report.body {
        for (k, v) in m {
            doc.insert(k.clone(), v.clone());
        }
    }
    Value::Object(doc)
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Plain-text rendering: one line per field, one row per check.
pub fn human(doc: &Value) -> String {
    let mut out = String::new();
    let Value::Object(m) = doc else { return compact(doc) };
    for (k, v) in m {
        if k == "checks" {
            continue;
        }
        out.push_str(&format!("{k:<14} {}\n", compact(v)));
    }
    if let Some(Value::Array(checks)) = m.get("checks") {
        let width = checks.iter().filter_map(|c| c["name"].as_str()).map(str::len).max().unwrap_or(0);
        out.push('\n');
        for c in checks {
            let name = c["name"].as_str().unwrap_or("");
            let status = c["status"].as_str().unwrap_or("");
            out.push_str(&format!("{name:<width$}  {status:<12}  {}\n", compact(&c["detail"])));
        }
    }
    out
}
