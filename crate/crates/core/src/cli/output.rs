//! Plot-ready CSV tables and the run manifest.
//!
//! Tables start with a single `#`-prefixed header line naming each column
//! and its unit, followed by comma-separated rows. Reals are written with
//! 17 significant digits; missing values are the literal `NA`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Token for a grid cell without a result.
pub const MISSING: &str = "NA";

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), fmt_real)
}

#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    body: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            header: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        debug_assert_eq!(cells.len(), self.header.len());
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            self.body.push_str(c.as_ref());
        }
        self.body.push('\n');
    }

    pub fn real_row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| fmt_real(v)).collect();
        self.row(&cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.body.len() + 64);
        let _ = writeln!(out, "# {}", self.header.join(","));
        out.push_str(&self.body);
        out
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
    pub summary: serde_json::Value,
    pub wall_seconds: f64,
}

/// Collects the files of one run and writes each one atomically.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> std::io::Result<()> {
        self.write_bytes(name, table.render().as_bytes())
    }

    pub fn write_bytes(&mut self, name: &str, data: &[u8]) -> std::io::Result<()> {
        write_atomic(&self.dir.join(name), data)?;
        self.records.push(OutputRecord {
            file: name.to_string(),
            bytes: data.len(),
            sha256: hex::encode(Sha256::digest(data)),
        });
        Ok(())
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    pub fn finish(self, mut manifest: RunManifest) -> std::io::Result<RunManifest> {
        manifest.outputs = self.records;
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        write_atomic(&self.dir.join("manifest.json"), &json)?;
        Ok(manifest)
    }
}

fn write_atomic(path: &Path, data: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(data)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
