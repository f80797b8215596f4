//! Report assembly and rendering.

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// A verification performed while producing a report. A failed check means an
/// internal invariant broke, and the process exits with the invariant code.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    /// The mathematical statement the check corresponds to.
    pub anchor: &'static str,
    pub passed: bool,
    pub tolerance: Option<f64>,
}

impl Check {
    pub fn exact(name: impl Into<String>, anchor: &'static str, passed: bool) -> Self {
        Check { name: name.into(), anchor, passed, tolerance: None }
    }

    pub fn within(name: impl Into<String>, anchor: &'static str, passed: bool, tolerance: f64) -> Self {
        Check { name: name.into(), anchor, passed, tolerance: Some(tolerance) }
    }

    fn to_json(&self) -> Value {
        json!({ "name": self.name, "anchor": self.anchor, "passed": self.passed, "tolerance": self.tolerance })
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub seed: u64,
    pub inputs: Map<String, Value>,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    /// Plain `q,psi` style table for `--format csv`.
    pub csv: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, seed: u64) -> Self {
        Report { command, seed, inputs: Map::new(), results: Map::new(), checks: Vec::new(), csv: None }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.results.insert(key.to_string(), value.into());
        self
    }

    pub fn check(&mut self, check: Check) -> &mut Self {
        self.checks.push(check);
        self
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "seed": self.seed,
            "inputs": Value::Object(self.inputs.clone()),
            "results": Value::Object(self.results.clone()),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("JSON values serialize");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{} (seed {})\n", self.command, self.seed);
        out.push_str("inputs:\n");
        for (k, v) in &self.inputs {
            out.push_str(&format!("  {k}: {}\n", compact(v)));
        }
        out.push_str("results:\n");
        for (k, v) in &self.results {
            out.push_str(&format!("  {k}: {}\n", compact(v)));
        }
        if !self.checks.is_empty() {
            out.push_str("checks:\n");
            for c in &self.checks {
                let tol = c.tolerance.map(|t| format!(" (tolerance {t:e})")).unwrap_or_default();
                out.push_str(&format!("  [{}] {}: {}{tol}\n", if c.passed { "ok" } else { "FAILED" }, c.name, c.anchor));
            }
        }
        out
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
