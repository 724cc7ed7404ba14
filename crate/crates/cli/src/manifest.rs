use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sharc_core::digest::sha256_hex;

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(sha256_hex(bytes))
}

/// Provenance record written next to every artifact as `<artifact>.run.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command_line: Vec<String>,
    pub subcommand: String,
    pub config: Value,
    pub config_digest: String,
    pub input_digests: BTreeMap<String, String>,
    pub output_digests: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
}

pub struct Run {
    subcommand: String,
    started_at: String,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    config: Value,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Run {
    pub fn start(subcommand: &str) -> Self {
        Run {
            subcommand: subcommand.to_string(),
            started_at: now(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            config: Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn config(&mut self, config: &impl Serialize) -> Result<()> {
        self.config = serde_json::to_value(config)?;
        Ok(())
    }

    /// The first output registered is the primary artifact.
    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes the manifest beside the primary artifact and checks its digest.
    pub fn finish(self, expect_digest: Option<&str>) -> Result<()> {
        let Some(primary) = self.outputs.first().cloned() else {
            if expect_digest.is_some() {
                bail!("--expect-digest given but {} wrote no artifact", self.subcommand);
            }
            return Ok(());
        };
        let mut output_digests = BTreeMap::new();
        for path in &self.outputs {
            output_digests.insert(path.display().to_string(), file_digest(path)?);
        }
        let primary_digest = output_digests[&primary.display().to_string()].clone();
        let config_digest = sha256_hex(serde_json::to_vec(&self.config)?);
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            subcommand: self.subcommand,
            config: self.config,
            config_digest,
            input_digests: self.inputs,
            output_digests,
            started_at: self.started_at,
            finished_at: now(),
        };
        let mut name = primary.clone().into_os_string();
        name.push(".run.json");
        let manifest_path = PathBuf::from(name);
        fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("cannot write {}", manifest_path.display()))?;
        log::info!("{} sha256 {primary_digest}", primary.display());
        if let Some(expected) = expect_digest {
            if !expected.eq_ignore_ascii_case(&primary_digest) {
                bail!(
                    "digest mismatch for {}: expected {expected}, got {primary_digest}",
                    primary.display()
                );
            }
        }
        Ok(())
    }
}
