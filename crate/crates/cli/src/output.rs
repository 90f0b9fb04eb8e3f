//! Tables, number formatting and provenance blocks.

use std::fs;
use std::path::Path;

use phonon_bjj::IntegratorOptions;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Format;
use crate::error::{CliError, Result};

pub const TOOL: &str = "phonon-bjj";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest decimal that reads back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Column-major table; `None` cells are left empty in CSV and `null` in JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            values: vec![Vec::new(); columns.len()],
        }
    }

    pub fn push(&mut self, row: &[Option<f64>]) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        for (col, v) in self.values.iter_mut().zip(row) {
            col.push(*v);
        }
    }

    pub fn push_full(&mut self, row: &[f64]) {
        let row: Vec<Option<f64>> = row.iter().map(|v| Some(*v)).collect();
        self.push(&row);
    }

    pub fn rows(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(&self.values[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in 0..self.rows() {
            let cells: Vec<String> = self
                .values
                .iter()
                .map(|col| col[r].map(fmt_f64).unwrap_or_default())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = json!({ "columns": self.columns, "values": self.values });
        pretty(&doc)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

pub fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize to JSON");
    s.push('\n');
    s
}

/// Provenance document written next to the data files it describes.
pub fn provenance(
    command: &str,
    config: &Value,
    integrator: Option<&IntegratorOptions>,
    files: &[String],
) -> String {
    pretty(&json!({
        "provenance": {
            "tool": TOOL,
            "version": VERSION,
            "command": command,
            "integrator": integrator,
            "files": files,
            "config": config,
        }
    }))
}

/// One emitted file held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub name: String,
    pub contents: String,
}

pub fn write_all(dir: &Path, files: &[Emitted]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    for f in files {
        let path = dir.join(&f.name);
        fs::write(&path, &f.contents).map_err(|source| CliError::Write { path, source })?;
    }
    Ok(())
}
