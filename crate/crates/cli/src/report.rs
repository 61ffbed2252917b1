//! Report bodies, tolerance checks and the files written per run.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Command, ExperimentConfig};

/// Artifact version in `git describe` form.
pub fn version() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

/// Plain notation for ordinary magnitudes, scientific otherwise.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// One configured tolerance and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("<= {}", num(max)),
            pass: value <= max,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, min: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("> {}", num(min)),
            pass: value > min,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, min: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!(">= {}", num(min)),
            pass: value >= min,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("{} +- {}", num(expected), num(tol)),
            pass: (value - expected).abs() <= tol,
        }
    }

    /// A yes/no property; `value` is 1 or 0.
    pub fn holds(name: impl Into<String>, ok: bool, what: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            bound: what.into(),
            pass: ok,
        }
    }
}

/// A named CSV detail table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

/// What an experiment produces before it is written out.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("result serializes");
        self.results.insert(key.to_string(), v);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn table(&mut self, name: impl Into<String>, csv: String) {
        self.tables.push(Table {
            name: name.into(),
            csv,
        });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// The JSON report. Contains nothing that varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub command: Command,
    pub config: Value,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn new(config: &ExperimentConfig, outcome: &Outcome) -> Self {
        Self {
            version: version(),
            command: config.command,
            config: config.echo(),
            results: outcome.results.clone(),
            checks: outcome.checks.clone(),
            pass: outcome.pass(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Run metadata kept out of the report body.
#[derive(Debug, Clone, Serialize)]
struct Metadata<'a> {
    version: String,
    created_unix_ms: u128,
    threads: usize,
    report: &'a str,
    tables: Vec<&'a str>,
}

/// Files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub report: PathBuf,
    pub tables: Vec<PathBuf>,
    pub metadata: PathBuf,
}

impl Written {
    /// Report and tables; the files that must reproduce bit for bit.
    pub fn bodies(&self) -> impl Iterator<Item = &PathBuf> {
        std::iter::once(&self.report).chain(&self.tables)
    }
}

pub fn write(
    dir: &Path,
    report: &Report,
    outcome: &Outcome,
    threads: usize,
) -> io::Result<Written> {
    fs::create_dir_all(dir)?;
    let cmd = report.command.name();
    let report_name = format!("{cmd}.json");
    fs::write(dir.join(&report_name), report.to_json())?;
    let mut tables = Vec::with_capacity(outcome.tables.len());
    let mut names = Vec::with_capacity(outcome.tables.len());
    for t in &outcome.tables {
        let name = format!("{cmd}_{}.csv", t.name);
        let path = dir.join(&name);
        fs::write(&path, &t.csv)?;
        tables.push(path);
        names.push(name);
    }
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let meta = Metadata {
        version: version(),
        created_unix_ms: created,
        threads,
        report: &report_name,
        tables: names.iter().map(String::as_str).collect(),
    };
    let metadata = dir.join(format!("{cmd}.meta.json"));
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    fs::write(&metadata, text)?;
    Ok(Written {
        report: dir.join(report_name),
        tables,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_compare_as_labelled() {
        assert!(Check::at_most("a", 1.0, 1.0).pass);
        assert!(!Check::above("a", 0.0, 0.0).pass);
        assert!(Check::within("a", 1.04, 1.0, 0.05).pass);
        assert!(!Check::within("a", f64::NAN, 1.0, 0.05).pass);
        assert!(!Check::holds("a", false, "x").pass);
    }

    #[test]
    fn written_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::defaults(Command::Qv);
        let mut o = Outcome::default();
        o.set("x", 1.5);
        o.check(Check::at_most("x", 1.5, 2.0));
        o.table("t", "a,b\n1,2\n".into());
        let r = Report::new(&cfg, &o);
        assert!(r.pass);
        let w = write(dir.path(), &r, &o, 3).unwrap();
        assert_eq!(w.tables[0].file_name().unwrap(), "qv_t.csv");
        let body: Value = serde_json::from_str(&fs::read_to_string(&w.report).unwrap()).unwrap();
        assert_eq!(body["results"]["x"], 1.5);
        assert_eq!(body["config"]["command"], "qv");
        assert!(body.get("created_unix_ms").is_none());
        let meta: Value = serde_json::from_str(&fs::read_to_string(&w.metadata).unwrap()).unwrap();
        assert_eq!(meta["threads"], 3);
    }
}
