use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::{Common, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    /// Reported for context; never fails the run.
    Info,
}

/// One line of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub value: Option<f64>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, value: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            value,
            detail: detail.into(),
        }
    }

    pub fn skipped(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            value: None,
            detail: detail.into(),
        }
    }

    pub fn info(name: impl Into<String>, value: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Info,
            value,
            detail: detail.into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

#[derive(Debug, Default)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub command: &'static str,
    /// Command-specific settings echoed next to the common ones.
    pub config: Map<String, Value>,
    /// Command-specific report fields.
    pub body: Map<String, Value>,
    pub table: Table,
    pub summary: Vec<String>,
    pub pass: bool,
    /// Extra files written into the `--out` directory.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            config: Map::new(),
            body: Map::new(),
            table: Table::default(),
            summary: Vec::new(),
            pass: true,
            files: Vec::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl Serialize) {
        self.config.insert(key.to_owned(), to_value(value));
    }

    pub fn field(&mut self, key: &str, value: impl Serialize) {
        self.body.insert(key.to_owned(), to_value(value));
    }

    /// Records checks as the report's table and folds them into the verdict.
    pub fn checks(&mut self, checks: Vec<Check>) {
        for c in &checks {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
                Status::Info => "INFO",
            };
            self.summary.push(format!("{status} {}: {}", c.name, c.detail));
        }
        self.pass &= !checks.iter().any(Check::failed);
        self.table = Table {
            headers: vec!["check", "status", "value", "detail"],
            rows: checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        to_value(c.status).as_str().unwrap_or_default().to_owned(),
                        c.value.map(num).unwrap_or_default(),
                        c.detail.clone(),
                    ]
                })
                .collect(),
        };
        self.field("checks", checks);
    }
}

pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Locale-independent shortest round-trip formatting.
pub fn num(v: f64) -> String {
    format!("{v}")
}

fn header(common: &Common, outcome: &Outcome) -> Value {
    let mut config = Map::new();
    config.insert("seed".into(), json!(common.seed));
    config.insert("trials".into(), json!(common.trials));
    config.insert("tol".into(), json!(common.tol));
    config.insert("format".into(), to_value(common.format));
    config.extend(outcome.config.clone());
    json!({
        "tool": "ontic",
        "version": env!("CARGO_PKG_VERSION"),
        "command": outcome.command,
        "config": config,
        "pass": outcome.pass,
    })
}

pub fn render(common: &Common, outcome: &Outcome) -> anyhow::Result<String> {
    let head = header(common, outcome);
    match common.format {
        Format::Json => {
            let mut doc = head.as_object().cloned().unwrap_or_default();
            doc.extend(outcome.body.clone());
            let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let config = head["config"]
                .as_object()
                .map(|m| {
                    m.iter()
                        .map(|(k, v)| match v {
                            Value::String(s) => format!("{k}={s}"),
                            other => format!("{k}={other}"),
                        })
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
            let mut out = format!(
                "# ontic {} command={} pass={} {config}\n",
                env!("CARGO_PKG_VERSION"),
                outcome.command,
                outcome.pass
            );
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&outcome.table.headers)?;
            for row in &outcome.table.rows {
                w.write_record(row)?;
            }
            out.push_str(std::str::from_utf8(&w.into_inner()?)?);
            Ok(out)
        }
    }
}

pub fn emit(common: &Common, outcome: &Outcome) -> anyhow::Result<()> {
    let text = render(common, outcome)?;
    match &common.out {
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
        Some(path) if !outcome.files.is_empty() || outcome.command == "toy-search" => {
            write_directory(path, &outcome.files)?;
            let ext = match common.format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            let summary = path.join(format!("summary.{ext}"));
            fs::write(&summary, text).with_context(|| format!("writing {}", summary.display()))?;
        }
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn write_directory(dir: &Path, files: &[(String, String)]) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
