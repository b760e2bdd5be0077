use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    InvariantFailure,
    ConfigError,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::InvariantFailure => 1,
            RunStatus::ConfigError => 2,
        }
    }

    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Parameter(_)
            | Error::Dimension(_)
            | Error::Size { .. }
            | Error::OutOfDomain { .. }
            | Error::DegenerateObservable(_)
            | Error::Dependency(_)
            | Error::Io(_) => RunStatus::ConfigError,
            _ => RunStatus::InvariantFailure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

/// Machine-readable summary of one run. Timings live here and never in the CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub command: String,
    pub version: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub config: Option<ExperimentConfig>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    pub headline: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<OutputFile>,
    pub timings: BTreeMap<String, f64>,
}

impl ExperimentRecord {
    pub fn new(command: &str, config: Option<ExperimentConfig>) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            status: RunStatus::Ok,
            error: None,
            config,
            diagnostics: BTreeMap::new(),
            headline: BTreeMap::new(),
            outputs: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn fail(&mut self, e: &Error) {
        self.status = RunStatus::of_error(e);
        self.error = Some(e.to_string());
    }

    /// Writes `<command>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}

/// One CSV cell. Floats use Rust's shortest round-trip formatting.
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Int(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// Collects a run's outputs and timings, then finalizes the record.
pub struct Recorder {
    pub record: ExperimentRecord,
    dir: PathBuf,
    started: Instant,
}

impl Recorder {
    pub fn new(command: &str, config: Option<ExperimentConfig>, dir: &Path) -> Self {
        Self {
            record: ExperimentRecord::new(command, config),
            dir: dir.to_path_buf(),
            started: Instant::now(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record.timings.insert(name.into(), start.elapsed().as_secs_f64());
        out
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Serialize) {
        self.record
            .diagnostics
            .insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    pub fn headline(&mut self, key: &str, value: impl Serialize) {
        self.record
            .headline
            .insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    /// Writes a CSV and registers it with its hash.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in &rows {
            if row.len() != header.len() {
                return Err(Error::Dimension(format!(
                    "{name}: row of {} cells under a header of {}",
                    row.len(),
                    header.len()
                )));
            }
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        fs::write(self.dir.join(name), &bytes)?;
        self.record.outputs.push(OutputFile {
            file: name.into(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            rows: rows.len(),
        });
        Ok(())
    }

    /// Records the outcome and writes the JSON, on success and failure alike.
    pub fn finish(mut self, outcome: Result<()>) -> Result<ExperimentRecord> {
        self.record.timings.insert("total".into(), self.started.elapsed().as_secs_f64());
        if let Err(e) = &outcome {
            self.record.fail(e);
        }
        let written = self.record.write(&self.dir);
        outcome?;
        written?;
        Ok(self.record)
    }
}
