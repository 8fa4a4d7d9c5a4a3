//! CSV tables with `#` comment headers and the JSON metadata sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use semiloc_core::ensemble::RealizationFailure;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Version of the CSV column layouts and of the metadata document.
pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    /// Written as an empty field.
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        if x.is_finite() {
            Cell::Float(x)
        } else {
            Cell::Missing
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::from)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

/// One CSV file: `<name><suffix>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub suffix: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(suffix: &'static str, columns: &'static [&'static str]) -> Self {
        Self {
            suffix,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.suffix);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Values of a numeric column (missing cells skipped).
    pub fn floats(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(k) => self.rows.iter().filter_map(|r| r[k].as_f64()).collect(),
            None => Vec::new(),
        }
    }

    pub fn file_name(&self, stem: &str) -> String {
        format!("{stem}{}.csv", self.suffix)
    }

    pub fn write(&self, path: &Path, config: &ExperimentConfig) -> Result<(), CliError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# semiloc {CODE_VERSION}")?;
        writeln!(out, "# schema_version: {SCHEMA_VERSION}")?;
        writeln!(out, "# table: {}{}", config.name, self.suffix)?;
        writeln!(out, "# seed: {}", config.seed)?;
        writeln!(out, "# config: {}", serde_json::to_string(&config.echo())?)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub tool: String,
    pub code_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputFile>,
    pub failures: Vec<RealizationFailure>,
    pub summary: serde_json::Value,
}

/// Writes every table and the `<name>.json` sidecar; returns the paths written.
pub fn write_all(
    dir: &Path,
    config: &ExperimentConfig,
    tables: &[Table],
    failures: &[RealizationFailure],
    summary: serde_json::Value,
    wall_time_seconds: f64,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut outputs = Vec::new();
    for t in tables {
        let name = t.file_name(&config.name);
        let path = dir.join(&name);
        t.write(&path, config)?;
        outputs.push(OutputFile {
            file: name,
            columns: t.columns.iter().map(|c| c.to_string()).collect(),
            rows: t.rows.len(),
        });
        written.push(path);
    }
    let meta = Metadata {
        schema_version: SCHEMA_VERSION,
        tool: "semiloc".into(),
        code_version: CODE_VERSION.into(),
        seed: config.seed,
        config: config.clone(),
        wall_time_seconds,
        outputs,
        failures: failures.to_vec(),
        summary,
    };
    let path = dir.join(format!("{}.json", config.name));
    let mut f = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut f, &meta)?;
    writeln!(f)?;
    f.flush()?;
    written.push(path);
    Ok(written)
}
