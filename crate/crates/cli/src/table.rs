//! Result tables and their CSV and sidecar outputs.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use tracethresh::ModelParams;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_nan() => "nan".into(),
            Cell::Float(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Float(v) => format!("{v:.6}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra results for the sidecar, such as outbreak classifications.
    pub summary: Option<Value>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

/// Everything recorded next to a CSV file.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub version: &'static str,
    /// Mean infectious period of the input, used as the time unit.
    pub time_scale: f64,
    pub normalized_params: ModelParams,
    pub columns: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<&'a Value>,
}

pub fn sidecar_path(csv: &Path) -> Result<PathBuf, CliError> {
    let json = csv.with_extension("json");
    if json == csv {
        return Err(CliError::Validation(format!(
            "output path {} must not end in .json",
            csv.display()
        )));
    }
    Ok(json)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        })
}

pub fn write_outputs(csv: &Path, table: &Table, sidecar: &Sidecar) -> Result<(), CliError> {
    let json = sidecar_path(csv)?;
    write_file(csv, table.to_csv().as_bytes())?;
    let mut text = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    text.push('\n');
    write_file(&json, text.as_bytes())
}
