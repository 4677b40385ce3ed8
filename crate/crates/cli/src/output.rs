//! CSV, manifest and report emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rapidmix_core::dynamics::{INTEGRATOR_TOL, TRACE_DRIFT_TOL};
use rapidmix_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::experiments::{Table, TOLERANCES};

/// Files the report generator knows about, in report order.
pub const CSV_FILES: &[&str] = &[
    "verify.csv",
    "scan_clustering.csv",
    "davies_gap.csv",
    "mlsi.csv",
    "mix.csv",
    "trajectory.csv",
    "local_mixing.csv",
    "tensorize.csv",
    "c_of_l.csv",
    "assembly.csv",
];

/// Rows shown per table in report.md; the CSV keeps everything.
const REPORT_ROWS: usize = 60;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Resource(format!("{}: {e}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn write_table(dir: &Path, t: &Table) -> Result<PathBuf> {
    let path = dir.join(&t.file);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    w.write_record(&t.header).map_err(|e| io_err(&path, e))?;
    for r in &t.rows {
        w.write_record(r).map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| io_err(path, e))?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn md_row(cells: &[String]) -> String {
    let escaped: Vec<String> = cells.iter().map(|c| c.replace('|', "\\|")).collect();
    format!("| {} |", escaped.join(" | "))
}

/// Builds report.md from the CSV files present in `dir`.
pub fn write_report(dir: &Path) -> Result<Option<PathBuf>> {
    let mut md = String::from("# rapidmix report\n\nTables below are copied from the CSV files in this directory.\n");
    let mut any = false;
    for f in CSV_FILES {
        let path = dir.join(f);
        if !path.exists() {
            continue;
        }
        any = true;
        let (header, rows) = read_csv(&path)?;
        let _ = writeln!(md, "\n## {f}\n");
        let _ = writeln!(md, "{}", md_row(&header));
        let _ = writeln!(md, "|{}", " --- |".repeat(header.len()));
        for r in rows.iter().take(REPORT_ROWS) {
            let _ = writeln!(md, "{}", md_row(r));
        }
        if rows.len() > REPORT_ROWS {
            let _ = writeln!(md, "\n{} of {} rows shown.", REPORT_ROWS, rows.len());
        }
        if *f == "verify.csv" {
            let status = header.iter().position(|h| h == "status");
            if let Some(s) = status {
                let fails = rows.iter().filter(|r| r[s] == "fail").count();
                let _ = writeln!(md, "\nFailed checks: {fails} of {}.", rows.len());
            }
        }
    }
    if !any {
        return Ok(None);
    }
    let path = dir.join("report.md");
    std::fs::write(&path, md).map_err(|e| io_err(&path, e))?;
    Ok(Some(path))
}

#[derive(Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Serialize)]
pub struct ExperimentStatus {
    pub experiment: String,
    pub status: String,
    pub message: String,
    pub seconds: f64,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub overrides: Vec<String>,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub experiments: Vec<ExperimentStatus>,
    pub tolerances: serde_json::Map<String, serde_json::Value>,
    pub files: Vec<FileEntry>,
}

pub fn tolerance_table() -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    for (k, v) in TOLERANCES {
        m.insert(k.to_string(), (*v).into());
    }
    m.insert("integrator_local_error".into(), INTEGRATOR_TOL.into());
    m.insert("trace_drift".into(), TRACE_DRIFT_TOL.into());
    m
}

pub fn file_entry(dir: &Path, path: &Path) -> Result<FileEntry> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(FileEntry {
        path: path
            .strip_prefix(dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

pub fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(m).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
}
