//! CSV and manifest emission. All floating-point values serialize with 17
//! significant digits so identical configs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects every artifact written to the output directory so the manifest
/// can list them all with content hashes.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<(String, usize, String)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        let digest = Sha256::digest(bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.written.push((name.to_string(), bytes.len(), hex));
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)
            .map_err(|e| CliError::runtime(format!("csv write error: {e}")))?;
        for row in rows {
            w.write_record(row)
                .map_err(|e| CliError::runtime(format!("csv write error: {e}")))?;
        }
        let bytes =
            w.into_inner().map_err(|e| CliError::runtime(format!("csv flush error: {e}")))?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::runtime(format!("json encode error: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Write `manifest.json` listing every prior output with its hash.
    pub fn finish_manifest(
        mut self,
        command: &str,
        config_echo: serde_json::Value,
        wall_time_seconds: f64,
    ) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Entry {
            path: String,
            bytes: usize,
            sha256: String,
        }
        #[derive(Serialize)]
        struct Manifest {
            command: String,
            version: String,
            config: serde_json::Value,
            wall_time_seconds: f64,
            outputs: Vec<Entry>,
        }
        let manifest = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config_echo,
            wall_time_seconds,
            outputs: self
                .written
                .iter()
                .map(|(path, bytes, sha256)| Entry {
                    path: path.clone(),
                    bytes: *bytes,
                    sha256: sha256.clone(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::runtime(format!("json encode error: {e}")))?;
        text.push('\n');
        let path = self.root.join("manifest.json");
        fs::write(&path, text)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        self.written.clear();
        Ok(())
    }
}

pub const HISTORY_HEADER: [&str; 7] =
    ["t", "sup_u", "l2_u", "h1_semi_u", "l2_v", "dt", "boundary_activity"];

pub fn history_rows(history: &[exwave_core::HistoryRow]) -> Vec<Vec<String>> {
    history
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.t),
                fmt_f64(r.sup_u),
                fmt_f64(r.l2_u),
                fmt_f64(r.h1_semi_u),
                fmt_f64(r.l2_v),
                fmt_f64(r.dt),
                fmt_f64(r.boundary_activity),
            ]
        })
        .collect()
}
