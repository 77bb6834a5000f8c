//! Run directory: CSV tables, JSON documents and the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fracwave_core::McEstimate;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Row of the shared Monte Carlo schema.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub alpha: f64,
    pub n: usize,
    pub p: f64,
    pub estimator: &'static str,
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub ess: f64,
    pub table_hash: String,
}

impl EstimateRow {
    pub fn new(alpha: f64, n: usize, p: f64, e: &McEstimate, table_hash: &str) -> Self {
        Self {
            alpha,
            n,
            p,
            estimator: e.estimator.name(),
            mean: e.mean,
            stderr: e.std_error,
            n_samples: e.n_samples,
            seed: e.seed,
            ess: e.ess_fraction,
            table_hash: table_hash.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub file: String,
    pub rows: Option<usize>,
    pub sha256: String,
}

pub struct RunDir {
    pub command: String,
    pub dir: PathBuf,
    started: Instant,
    files: Vec<FileRecord>,
    table_hashes: Vec<(usize, String)>,
    pub summary: serde_json::Map<String, Value>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunDir {
    pub fn create(command: &str, dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            command: command.to_string(),
            dir: dir.to_path_buf(),
            started: Instant::now(),
            files: Vec::new(),
            table_hashes: Vec::new(),
            summary: serde_json::Map::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8], rows: Option<usize>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.retain(|f| f.file != name);
        self.files.push(FileRecord {
            file: name.to_string(),
            rows,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Csv(csv::Error::from(e.into_error())))?;
        self.write_bytes(name, &bytes, Some(rows.len()))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes, None)
    }

    pub fn record_table(&mut self, n: usize, hash: &str) {
        if !self.table_hashes.iter().any(|(m, h)| *m == n && h == hash) {
            self.table_hashes.push((n, hash.to_string()));
        }
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.summary.insert(key.to_string(), v);
    }

    /// Writes `<command>.manifest.json` with the outcome of the run.
    pub fn finish(
        self,
        argv: &[String],
        config: &RunConfig,
        threads: usize,
        status: Result<(), &CliError>,
    ) -> Result<PathBuf, CliError> {
        let (status, error, exit_code) = match status {
            Ok(()) => ("ok", Value::Null, 0),
            Err(e) => ("failed", Value::String(e.to_string()), e.exit_code()),
        };
        let manifest = serde_json::json!({
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "command": self.command,
            "argv": argv,
            "config": config.to_json(),
            "potential_source": config.potential.source,
            "seeds": config.seeds,
            "versions": {
                "fracwave": env!("CARGO_PKG_VERSION"),
                "manifest_schema": MANIFEST_SCHEMA_VERSION,
            },
            "threads": threads,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "status": status,
            "exit_code": exit_code,
            "error": error,
            "renorm_tables": self.table_hashes.iter()
                .map(|(n, h)| serde_json::json!({"n": n, "hash": h}))
                .collect::<Vec<_>>(),
            "files": self.files,
            "summary": self.summary,
        });
        let name = format!("{}.manifest.json", self.command);
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
