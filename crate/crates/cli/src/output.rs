//! Tables, their CSV/JSON renderings, and the manifest written beside each
//! output file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Floats in scientific notation with 17 significant digits, so every
    /// value reads back bit-exact.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Float(v) => format!("{v:.16e}"),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<Value>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
                        Cell::Int(v) => Value::from(*v),
                        Cell::Text(s) => Value::from(s.as_str()),
                    })
                    .collect()
            })
            .collect();
        let columns = serde_json::to_string(&self.columns).expect("columns serialize");
        let rows: Vec<String> = rows.iter().map(|r| serde_json::to_string(r).expect("row serializes")).collect();
        format!("{{\n  \"columns\": {columns},\n  \"rows\": [\n    {}\n  ]\n}}\n", rows.join(",\n    "))
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Provenance of one output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub version: String,
    pub timestamp: String,
    pub output: String,
    /// `sha256:` and the hex digest of the output file's bytes.
    pub checksum: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Value, output: &Path, body: &str) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            output: output.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            checksum: checksum(body),
        }
    }
}

pub fn checksum(body: &str) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(body.as_bytes())))
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Rendered table plus what is needed to write it.
pub struct Artifact {
    pub path: PathBuf,
    pub body: String,
    pub manifest: RunManifest,
}

impl Artifact {
    pub fn new(command: &str, parameters: Value, path: PathBuf, table: &Table, format: Format) -> Self {
        let body = table.render(format);
        let manifest = RunManifest::new(command, parameters, &path, &body);
        Self { path, body, manifest }
    }
}

/// Writes every artifact and its manifest. Each file goes through a
/// temporary file and a rename; if any write fails, files already written by
/// this call are removed again.
pub fn write_all(artifacts: &[Artifact]) -> Result<()> {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        for a in artifacts {
            let manifest = serde_json::to_string_pretty(&a.manifest)? + "\n";
            for (path, text) in [(a.path.clone(), a.body.as_str()), (manifest_path(&a.path), manifest.as_str())] {
                write_atomic(&path, text)?;
                written.push(path);
            }
        }
        Ok(())
    })();
    if result.is_err() {
        for path in written {
            let _ = fs::remove_file(path);
        }
    }
    result
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
