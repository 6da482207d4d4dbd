//! Per-run manifests: config snapshot, seed, input and output checksums,
//! versions and wall time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use chrono::{SecondsFormat, Utc};
use crossim_core::sha256_file;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub config: RunConfig,
    /// Path to SHA-256 hex.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub versions: BTreeMap<String, String>,
    pub started_at: String,
    pub wall_time_secs: f64,
}

/// Collects a manifest while a subcommand runs.
pub struct Run {
    manifest: Manifest,
    clock: Instant,
}

impl Run {
    pub fn start(command: &str, argv: &[String], config: &RunConfig) -> Self {
        let versions = BTreeMap::from([
            (
                "crossim-cli".to_string(),
                env!("CARGO_PKG_VERSION").to_string(),
            ),
            (
                "crossim-core".to_string(),
                crossim_core::VERSION.to_string(),
            ),
            (
                "clean-rules".to_string(),
                crossim_core::corpus::CleaningRules::builtin()
                    .version
                    .to_string(),
            ),
        ]);
        Self {
            manifest: Manifest {
                command: command.to_string(),
                argv: argv.to_vec(),
                seed: config.seed,
                config: config.clone(),
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                versions,
                started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
                wall_time_secs: 0.0,
            },
            clock: Instant::now(),
        }
    }

    /// Records an input and checks that it exists.
    pub fn input(&mut self, path: &Path) -> anyhow::Result<PathBuf> {
        if !path.is_file() {
            return Err(crate::input_error(format!(
                "input file {} does not exist",
                path.display()
            )));
        }
        let digest = sha256_file(path).with_context(|| format!("hashing {}", path.display()))?;
        self.manifest
            .inputs
            .insert(path.display().to_string(), digest);
        Ok(path.to_path_buf())
    }

    pub fn output(&mut self, path: &Path) -> anyhow::Result<()> {
        let digest = sha256_file(path).with_context(|| format!("hashing {}", path.display()))?;
        self.manifest
            .outputs
            .insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Writes the manifest next to a single-file output, or into an output directory.
    pub fn finish(mut self, out: &Path) -> anyhow::Result<PathBuf> {
        let path = manifest_path(out);
        self.manifest.wall_time_secs = self.clock.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        log::info!(
            "{} finished in {:.2}s",
            self.manifest.command,
            self.manifest.wall_time_secs
        );
        Ok(path)
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join(MANIFEST_FILE)
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        out.with_file_name(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_records_checksums_and_seed() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, b"abc").unwrap();
        let out = dir.path().join("out.csv");
        let cfg = RunConfig {
            seed: 42,
            ..RunConfig::default()
        };
        let mut run = Run::start("test", &["crossim".into()], &cfg);
        run.input(&input).unwrap();
        std::fs::write(&out, b"x").unwrap();
        run.output(&out).unwrap();
        let path = run.finish(&out).unwrap();
        assert_eq!(path, dir.path().join("out.csv.manifest.json"));
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(m.seed, 42);
        assert_eq!(
            m.inputs[&input.display().to_string()],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(Run::start("t", &[], &cfg)
            .input(&dir.path().join("missing"))
            .is_err());
    }
}
