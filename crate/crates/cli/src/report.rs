//! Run reports. Field order in the structs below is the JSON field order.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Point {
    pub snapshot: String,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub id: String,
    pub kind: String,
    pub inputs: BTreeMap<String, String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub germ: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cited: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub elapsed_us: u64,
}

impl Record {
    pub fn new(id: impl Into<String>, kind: impl Into<String>) -> Record {
        Record {
            id: id.into(),
            kind: kind.into(),
            inputs: BTreeMap::new(),
            status: Status::Pass,
            germ: None,
            values: Vec::new(),
            verdict: None,
            rule: None,
            cited: Vec::new(),
            witness: None,
            checks: Vec::new(),
            note: None,
            error: None,
            elapsed_us: 0,
        }
    }

    pub fn input(&mut self, key: &str, value: impl ToString) {
        self.inputs.insert(key.to_string(), value.to_string());
    }

    /// Records a named check; a failed check fails the record.
    pub fn check(&mut self, name: impl Into<String>, pass: bool) {
        if !pass && self.status == Status::Pass {
            self.status = Status::Fail;
        }
        self.checks.push(Check {
            name: name.into(),
            pass,
        });
    }

    pub fn fail_with(&mut self, error: impl ToString) {
        self.status = Status::Error;
        self.error = Some(error.to_string());
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UniverseInfo {
    pub mode: String,
    pub bound: u32,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub universe: UniverseInfo,
    pub base: String,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    pub fn new(
        command: impl Into<String>,
        seed: u64,
        universe: UniverseInfo,
        base: String,
    ) -> Report {
        Report {
            tool: "nap",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed,
            universe,
            base,
            records: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn push(&mut self, r: Record) {
        self.summary.total += 1;
        match r.status {
            Status::Pass => self.summary.passed += 1,
            Status::Fail => self.summary.failed += 1,
            Status::Error => self.summary.errors += 1,
        }
        self.records.push(r);
    }

    pub fn ok(&self) -> bool {
        self.summary.failed == 0 && self.summary.errors == 0
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => serde_json::to_string_pretty(self)
                .map(|s| s + "\n")
                .map_err(|e| CliError::Internal(e.to_string())),
            Format::Csv => self.csv(),
        }
    }

    fn csv(&self) -> Result<String> {
        let internal = |e: csv::Error| CliError::Internal(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "id",
            "kind",
            "status",
            "germ",
            "values",
            "verdict",
            "rule",
            "cited",
            "witness",
            "checks",
            "note",
            "error",
            "elapsed_us",
        ])
        .map_err(internal)?;
        for r in &self.records {
            let values: Vec<String> = r
                .values
                .iter()
                .map(|p| format!("{}={}", p.snapshot, p.value))
                .collect();
            let checks: Vec<String> = r
                .checks
                .iter()
                .map(|c| format!("{}:{}", c.name, if c.pass { "pass" } else { "fail" }))
                .collect();
            let status = match r.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Error => "error",
            };
            w.write_record([
                r.id.as_str(),
                r.kind.as_str(),
                status,
                r.germ.as_deref().unwrap_or(""),
                &values.join(" | "),
                r.verdict.as_deref().unwrap_or(""),
                r.rule.as_deref().unwrap_or(""),
                &r.cited.join(" | "),
                r.witness.as_deref().unwrap_or(""),
                &checks.join(" | "),
                r.note.as_deref().unwrap_or(""),
                r.error.as_deref().unwrap_or(""),
                &r.elapsed_us.to_string(),
            ])
            .map_err(internal)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
    }
}
