use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::io::{read_bytes, write_text};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one command run, written next to its main output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Run {
    command: String,
    started: f64,
}

impl Run {
    pub fn start(command: &str) -> Run {
        Run {
            command: command.to_owned(),
            started: now(),
        }
    }

    /// Writes `<output>.manifest.json`.
    pub fn finish(self, output: &Path, config: serde_json::Value, inputs: &[&Path], seed: Option<u64>) -> Result<()> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: sha256_hex(&read_bytes(p)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let m = RunManifest {
            command: self.command,
            config,
            inputs,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            started_unix: self.started,
            finished_unix: now(),
        };
        let text = serde_json::to_string_pretty(&m)? + "\n";
        write_text(&manifest_path(output), &text)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    sibling(output, "manifest.json")
}

/// `<output>.<suffix>` in the same directory.
pub fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    output.with_file_name(name)
}
