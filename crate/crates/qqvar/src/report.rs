//! CSV and manifest emission. Numbers are printed with 17 significant digits
//! so every f64 round-trips exactly; display rounding is left to consumers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

pub const QUANTILE_CONVENTION: &str = "empirical quantile = ceil(n*alpha)-th order statistic";
pub const HALFSPACE_CONVENTION: &str = "half-space A = { r : -w'r <= t } (closed)";

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Everything needed to reproduce a run byte-for-byte, written next to every
/// output the tool produces.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub threads: usize,
    pub quantile_convention: String,
    pub halfspace_convention: String,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub created_unix_secs: u64,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, threads: usize, config: serde_json::Value) -> Self {
        RunManifest {
            tool: "qqvar".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            master_seed,
            threads,
            quantile_convention: QUANTILE_CONVENTION.to_string(),
            halfspace_convention: HALFSPACE_CONVENTION.to_string(),
            config,
            outputs: Vec::new(),
            created_unix_secs: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}_manifest.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(self).expect("manifest serializes"))?;
        Ok(path)
    }
}
