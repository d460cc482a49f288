//! Report writers.
//!
//! CSV reports start with `# key=value` lines echoing the run configuration,
//! followed by a long-format table `section,row,statistic,value,display`.
//! `value` carries full precision (shortest round-trip form); `display` is the
//! value rounded half-to-even to two decimals. JSON reports carry the same
//! configuration under `"config"`.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Ordered `key=value` configuration echo.
#[derive(Debug, Default, Clone)]
pub struct RunConfig {
    entries: Vec<(String, String)>,
}

impl RunConfig {
    pub fn new(subcommand: &str) -> Self {
        let mut c = RunConfig::default();
        c.set("subcommand", subcommand);
        c.set("version", env!("CARGO_PKG_VERSION"));
        c
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_owned(), value)),
        }
        self
    }

    /// Floats use the shortest round-trip form with exponents for tiny values.
    pub fn set_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, format!("{value:?}"))
    }

    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        Value::Object(map)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub section: String,
    pub row: String,
    pub statistic: String,
    pub value: Option<f64>,
}

impl Record {
    pub fn new(section: &str, row: impl ToString, statistic: impl ToString, value: impl Into<Option<f64>>) -> Self {
        Record {
            section: section.to_owned(),
            row: row.to_string(),
            statistic: statistic.to_string(),
            value: value.into(),
        }
    }
}

/// Two-decimal display with ties rounded to even.
pub fn display(v: f64) -> String {
    format!("{:.2}", (v * 100.0).round_ties_even() / 100.0)
}

fn render_csv(config: &RunConfig, records: &[Record]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    for (k, v) in &config.entries {
        writeln!(buf, "# {k}={v}").expect("writing to memory");
    }
    let mut w = csv::Writer::from_writer(buf);
    let to_err = |e: csv::Error| CliError::Usage(format!("failed to render CSV: {e}"));
    w.write_record(["section", "row", "statistic", "value", "display"])
        .map_err(to_err)?;
    for r in records {
        let (value, shown) = match r.value {
            Some(v) => (v.to_string(), display(v)),
            None => (String::new(), String::new()),
        };
        w.write_record([r.section.as_str(), &r.row, &r.statistic, &value, &shown])
            .map_err(to_err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("failed to render CSV: {e}")))
}

fn emit(dest: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match dest {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// Writes either the long CSV table or `json` with the config block added.
pub fn write_report(
    dest: Option<&Path>,
    format: Format,
    config: &RunConfig,
    records: &[Record],
    json: Value,
) -> CliResult<()> {
    let bytes = match format {
        Format::Csv => render_csv(config, records)?,
        Format::Json => {
            let mut obj = Map::new();
            obj.insert("config".into(), config.to_json());
            match json {
                Value::Object(body) => obj.extend(body),
                other => {
                    obj.insert("report".into(), other);
                }
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON values serialize");
            s.push('\n');
            s.into_bytes()
        }
    };
    emit(dest, &bytes)
}

/// Writes a plain CSV with the given header and rows (histograms).
pub fn write_plain_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::Usage(format!("failed to render CSV: {e}"));
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.write_record(r).map_err(to_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Usage(format!("failed to render CSV: {e}")))?;
    emit(Some(path), &bytes)
}
