//! CSV and JSON writers.
//!
//! Every CSV starts with three `#` comment lines (schema version, config
//! hash, seed) followed by a header row. Numbers are written with 17
//! significant digits. JSON reports are flat lists of metric records.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// JSON Schema describing [`Report`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Num(x) => format!("{x:.16e}"),
            Field::Int(i) => i.to_string(),
            Field::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Text(s.to_string())
    }
}

/// Provenance stamped on every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stamp {
    pub config_sha256: String,
    pub seed: u64,
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_csv<I>(path: &Path, stamp: &Stamp, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<Field>>,
{
    let io = |e: std::io::Error| CliError::io(path, e);
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# schema_version={SCHEMA_VERSION}").map_err(io)?;
    writeln!(out, "# config_sha256={}", stamp.config_sha256).map_err(io)?;
    writeln!(out, "# seed={}", stamp.seed).map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(CliError::Numerical(format!(
                "{}: row has {} fields, header has {}",
                path.display(),
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(Field::render)).map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// One scalar result. `hurst = None` marks the limit process or an
/// H-independent quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricRecord {
    #[serde(rename = "H")]
    pub hurst: Option<f64>,
    #[serde(rename = "N")]
    pub steps: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub records: Vec<MetricRecord>,
}

impl Report {
    pub fn new(command: &str, stamp: &Stamp) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config_sha256: stamp.config_sha256.clone(),
            seed: stamp.seed,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, hurst: Option<f64>, steps: usize, metric: &str, value: f64, stderr: Option<f64>) {
        self.records.push(MetricRecord {
            hurst,
            steps,
            seed: self.seed,
            metric: metric.to_string(),
            value,
            stderr,
        });
    }

    pub fn find(&self, hurst: Option<f64>, metric: &str) -> Option<&MetricRecord> {
        self.records.iter().find(|r| r.hurst == hurst && r.metric == metric)
    }

    /// Writes the report and the schema next to it.
    pub fn write(&self, path: &Path) -> CliResult<()> {
        if let Some(bad) = self
            .records
            .iter()
            .find(|r| !r.value.is_finite() || r.stderr.is_some_and(|s| !s.is_finite()))
        {
            return Err(CliError::Numerical(format!(
                "metric '{}' at H={:?} is not finite ({}, {:?})",
                bad.metric, bad.hurst, bad.value, bad.stderr
            )));
        }
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Numerical(format!("cannot serialise report: {e}")))?;
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
        let schema = schema_path(path);
        std::fs::write(&schema, REPORT_SCHEMA).map_err(|e| CliError::io(&schema, e))
    }
}

fn schema_path(report: &Path) -> PathBuf {
    report.with_file_name("report.schema.json")
}

/// File-name fragment for a Hurst index, e.g. `H-0.49`, or `limit`.
pub fn process_tag(hurst: Option<f64>) -> String {
    match hurst {
        Some(h) => format!("H{h}"),
        None => "limit".to_string(),
    }
}
