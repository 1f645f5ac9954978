//! CSV tables, JSON sidecars and the column schema they follow.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ResolvedConfig;
use crate::error::{CliError, CliResult};

/// Version of the column layout documented in `schema/csv_schema.json`.
pub const SCHEMA_VERSION: &str = "1.0.0";

/// The shipped column schema.
pub const SCHEMA_JSON: &str = include_str!("../schema/csv_schema.json");

/// A CSV row type with a fixed, documented column order.
pub trait Record: Serialize {
    const FILE: &'static str;
    const COLUMNS: &'static [&'static str];
}

/// First 16 hex digits of the SHA-256 of the resolved config's JSON form.
pub fn config_hash(cfg: &ResolvedConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("resolved config serializes");
    let digest = Sha256::digest(&bytes);
    let mut out = String::with_capacity(16);
    for b in digest.iter().take(8) {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

/// Writes `rows` to `<dir>/<R::FILE>`; the header is written even for an empty table.
pub fn write_table<R: Record>(dir: &Path, rows: &[R]) -> CliResult<PathBuf> {
    let path = dir.join(R::FILE);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path)?;
    w.write_record(R::COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(path)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    schema_version: &'static str,
    command: &'a str,
    config_hash: String,
    files: Vec<&'a str>,
    config: &'a ResolvedConfig,
}

/// Writes `<dir>/<command>.json` describing the run that produced `files`.
pub fn write_sidecar(dir: &Path, command: &str, cfg: &ResolvedConfig, files: &[&str]) -> CliResult<PathBuf> {
    let path = dir.join(format!("{command}.json"));
    let sidecar = Sidecar {
        schema_version: SCHEMA_VERSION,
        command,
        config_hash: config_hash(cfg),
        files: files.to_vec(),
        config: cfg,
    };
    let mut text = serde_json::to_string_pretty(&sidecar).map_err(CliError::runtime)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Column names the shipped schema documents for `file`.
pub fn schema_columns(file: &str) -> Option<Vec<String>> {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA_JSON).ok()?;
    let cols = schema["files"][file]["columns"].as_array()?;
    cols.iter().map(|c| c["name"].as_str().map(str::to_owned)).collect()
}

pub fn format_params(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}
