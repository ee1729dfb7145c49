//! Artifact writing: CSV tables, JSON documents and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Float with 17 significant digits, which round-trips every `f64`.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Parses a value written by [`float`].
pub fn parse_float(s: &str) -> Result<f64, CliError> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| CliError::Io(format!("not a number: {t:?}"))),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub task: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Hash of the config with the output directory and worker count
    /// removed, neither of which affects the results.
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedRecord>,
    pub outputs: Vec<OutputRecord>,
    /// Name of the failed check, if any.
    pub failed_check: Option<String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest, CliError> {
        let text = crate::config::read(&dir.join(MANIFEST))?;
        serde_json::from_str(&text).map_err(|e| CliError::Io(format!("manifest: {e}")))
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = None;
    c.workers = None;
    sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
}

/// Collects the files written by one run.
pub struct Artifacts {
    dir: PathBuf,
    outputs: Vec<OutputRecord>,
    seeds: Vec<SeedRecord>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            seeds: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn seed(&mut self, task: impl Into<String>, seed: u64) {
        self.seeds.push(SeedRecord {
            task: task.into(),
            seed,
        });
    }

    pub fn raw(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.outputs.push(OutputRecord {
            file: name.into(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.raw(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.raw(name, text.as_bytes())
    }

    pub fn finish(self, cfg: &ExperimentConfig, failed_check: Option<String>) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: cfg.command.name().into(),
            config_sha256: config_hash(cfg),
            config: cfg.clone(),
            seeds: self.seeds,
            outputs: self.outputs,
            failed_check,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, -0.0, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE, -1e-300, 0.1 + 0.2] {
            let s = float(x);
            assert_eq!(parse_float(&s).unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
        assert_eq!(parse_float(&float(f64::INFINITY)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn hash_ignores_placement() {
        let mut a = ExperimentConfig::new(crate::config::Command::Build);
        let mut b = a.clone();
        a.output_dir = Some("x".into());
        b.workers = Some(3);
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed = Some(1);
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
