//! Input file readers. CSV files are comma separated with a required header
//! row; lines starting with `#` are comments. JSON is chosen by a `.json`
//! extension.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use nominal_uq::Error;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    if text.trim().is_empty() {
        return Err(CliError::lib(path.display().to_string(), Error::EmptyInput));
    }
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, Some(e.line() as u64), e.to_string()))
}

#[derive(Debug)]
pub struct CsvRow {
    pub line: u64,
    pub cells: Vec<String>,
}

#[derive(Debug)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<CsvRow>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h.eq_ignore_ascii_case(name))
    }
}

pub fn read_csv(path: &Path) -> CliResult<CsvTable> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| {
        let line = e.position().map(|p| p.line());
        CliError::parse(path, line, e.to_string())
    };
    let headers: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::lib(path.display().to_string(), Error::EmptyInput));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(CsvRow {
            line,
            cells: record.iter().map(str::to_owned).collect(),
        });
    }
    if rows.is_empty() {
        return Err(CliError::lib(path.display().to_string(), Error::EmptyInput));
    }
    Ok(CsvTable { headers, rows })
}

pub fn parse_f64(path: &Path, line: u64, column: &str, cell: &str) -> CliResult<f64> {
    cell.parse::<f64>()
        .map_err(|_| CliError::parse(path, Some(line), format!("column {column:?}: {cell:?} is not a number")))
}

/// One-based class label to zero-based index.
pub fn parse_label(path: &Path, line: u64, cell: &str) -> CliResult<usize> {
    match cell.parse::<usize>() {
        Ok(l) if l >= 1 => Ok(l - 1),
        _ => Err(CliError::parse(
            path,
            Some(line),
            format!("label {cell:?} is not a class number (1-based)"),
        )),
    }
}

/// Probability rows with their position in the file for error messages.
#[derive(Debug)]
pub struct PmfRows {
    pub class_names: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    /// File line per row (CSV) or `None` (JSON).
    pub lines: Vec<Option<u64>>,
}

impl PmfRows {
    pub fn row_context(&self, i: usize) -> String {
        match self.lines[i] {
            Some(line) => format!("row {} (line {line})", i + 1),
            None => format!("row {}", i + 1),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PmfJson {
    Bare(Vec<Vec<f64>>),
    Named {
        #[serde(default)]
        class_names: Option<Vec<String>>,
        pmfs: Vec<Vec<f64>>,
    },
}

/// PMF rows: CSV with class names in the header, or JSON as either an array
/// of arrays or `{"class_names": [...], "pmfs": [[...], ...]}`.
pub fn read_pmf_rows(path: &Path) -> CliResult<PmfRows> {
    if is_json(path) {
        let (class_names, rows) = match read_json::<PmfJson>(path)? {
            PmfJson::Bare(rows) => (None, rows),
            PmfJson::Named { class_names, pmfs } => (class_names, pmfs),
        };
        if rows.is_empty() {
            return Err(CliError::lib(path.display().to_string(), Error::EmptyInput));
        }
        let lines = vec![None; rows.len()];
        return Ok(PmfRows {
            class_names,
            rows,
            lines,
        });
    }
    let table = read_csv(path)?;
    let mut rows = Vec::with_capacity(table.rows.len());
    let mut lines = Vec::with_capacity(table.rows.len());
    for r in &table.rows {
        let values = r
            .cells
            .iter()
            .zip(&table.headers)
            .map(|(c, h)| parse_f64(path, r.line, h, c))
            .collect::<CliResult<Vec<_>>>()?;
        rows.push(values);
        lines.push(Some(r.line));
    }
    Ok(PmfRows {
        class_names: Some(table.headers),
        rows,
        lines,
    })
}

/// Probability rows plus one-based labels.
#[derive(Debug)]
pub struct LabeledRows {
    pub pmfs: PmfRows,
    pub labels: Vec<usize>,
}

#[derive(Deserialize)]
struct LabeledJsonRow {
    probs: Vec<f64>,
    label: usize,
}

#[derive(Deserialize)]
struct LabeledJson {
    #[serde(default)]
    class_names: Option<Vec<String>>,
    rows: Vec<LabeledJsonRow>,
}

/// Scoring input: CSV columns `p_1..p_K,label` (the last column is the label),
/// or JSON `{"class_names": [...], "rows": [{"probs": [...], "label": k}]}`.
/// Labels are one-based in files and zero-based in the result.
pub fn read_labeled_rows(path: &Path) -> CliResult<LabeledRows> {
    if is_json(path) {
        let parsed: LabeledJson = read_json(path)?;
        if parsed.rows.is_empty() {
            return Err(CliError::lib(path.display().to_string(), Error::EmptyInput));
        }
        let labels = parsed
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.label
                    .checked_sub(1)
                    .ok_or_else(|| CliError::lib(format!("row {}", i + 1), Error::InvalidLabel { row: i }))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let n = parsed.rows.len();
        return Ok(LabeledRows {
            pmfs: PmfRows {
                class_names: parsed.class_names,
                rows: parsed.rows.into_iter().map(|r| r.probs).collect(),
                lines: vec![None; n],
            },
            labels,
        });
    }
    let table = read_csv(path)?;
    if table.headers.len() < 3 {
        return Err(CliError::parse(
            path,
            Some(1),
            "expected at least two probability columns followed by a label column",
        ));
    }
    let k = table.headers.len() - 1;
    let mut rows = Vec::with_capacity(table.rows.len());
    let mut lines = Vec::with_capacity(table.rows.len());
    let mut labels = Vec::with_capacity(table.rows.len());
    for r in &table.rows {
        let values = r.cells[..k]
            .iter()
            .zip(&table.headers)
            .map(|(c, h)| parse_f64(path, r.line, h, c))
            .collect::<CliResult<Vec<_>>>()?;
        labels.push(parse_label(path, r.line, &r.cells[k])?);
        rows.push(values);
        lines.push(Some(r.line));
    }
    Ok(LabeledRows {
        pmfs: PmfRows {
            class_names: Some(table.headers[..k].to_vec()),
            rows,
            lines,
        },
        labels,
    })
}

/// Feature rows for the classifier: numeric feature columns, a `label`
/// column (required for training), and an optional `group` column marking
/// replicated realizations of one uncertain input.
#[derive(Debug)]
pub struct FeatureRows {
    pub feature_names: Vec<String>,
    /// One entry per group, in order of first appearance.
    pub groups: Vec<FeatureGroup>,
}

#[derive(Debug)]
pub struct FeatureGroup {
    pub id: String,
    pub line: u64,
    pub inputs: Vec<Vec<f64>>,
    pub label: Option<usize>,
}

pub fn read_feature_rows(path: &Path, require_label: bool) -> CliResult<FeatureRows> {
    let table = read_csv(path)?;
    let label_col = table.column("label");
    let group_col = table.column("group");
    if require_label && label_col.is_none() {
        return Err(CliError::parse(path, Some(1), "missing required column \"label\""));
    }
    let feature_cols: Vec<usize> = (0..table.headers.len())
        .filter(|&c| Some(c) != label_col && Some(c) != group_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(CliError::parse(path, Some(1), "no feature columns"));
    }
    let mut groups: Vec<FeatureGroup> = Vec::new();
    let mut index: std::collections::BTreeMap<String, usize> = Default::default();
    for (i, r) in table.rows.iter().enumerate() {
        let x = feature_cols
            .iter()
            .map(|&c| parse_f64(path, r.line, &table.headers[c], &r.cells[c]))
            .collect::<CliResult<Vec<_>>>()?;
        let label = label_col.map(|c| parse_label(path, r.line, &r.cells[c])).transpose()?;
        let id = match group_col {
            Some(c) => r.cells[c].clone(),
            None => (i + 1).to_string(),
        };
        match index.get(&id) {
            Some(&g) => {
                if groups[g].label != label {
                    return Err(CliError::parse(
                        path,
                        Some(r.line),
                        format!("group {id:?} has conflicting labels"),
                    ));
                }
                groups[g].inputs.push(x);
            }
            None => {
                index.insert(id.clone(), groups.len());
                groups.push(FeatureGroup {
                    id,
                    line: r.line,
                    inputs: vec![x],
                    label,
                });
            }
        }
    }
    Ok(FeatureRows {
        feature_names: feature_cols.iter().map(|&c| table.headers[c].clone()).collect(),
        groups,
    })
}
