//! `report.json` and the output directory.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::run::Artifact;

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub cdch_core: &'static str,
    pub cdch_cli: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub manifest_sha256: String,
    pub versions: Versions,
    pub seed: u64,
    pub threads: usize,
    pub timestamp: String,
}

impl Provenance {
    pub fn new(manifest_bytes: &[u8], seed: u64, threads: usize) -> Self {
        let digest = Sha256::digest(manifest_bytes);
        Provenance {
            manifest_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            versions: Versions { cdch_core: cdch_core::VERSION, cdch_cli: env!("CARGO_PKG_VERSION") },
            seed,
            threads,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Validation,
    Numerical,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorEntry {
    pub kind: String,
    pub class: ErrorClass,
    pub message: String,
}

impl ErrorEntry {
    pub fn validation(message: String) -> Self {
        ErrorEntry { kind: "Validation".into(), class: ErrorClass::Validation, message }
    }

    pub fn from_core(e: &cdch_core::Error) -> Self {
        let class = if e.is_numerical() { ErrorClass::Numerical } else { ErrorClass::Validation };
        ErrorEntry { kind: e.kind().into(), class, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub provenance: Provenance,
    pub errors: Vec<ErrorEntry>,
}

pub fn write_outputs(dir: &Path, report: &Report, artifacts: &[Artifact]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        fs::write(dir.join(&a.name), &a.contents)?;
    }
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    fs::write(dir.join("report.json"), json + "\n")
}
