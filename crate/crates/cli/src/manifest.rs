use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance written next to every output as `<output>.manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Hash of command, config, seeds and input contents; paths and timing excluded.
    pub manifest_hash: String,
    pub wall_clock_secs: f64,
}

pub struct Run {
    command: String,
    config: serde_json::Value,
    seeds: Vec<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<(PathBuf, Vec<u8>)>,
    started: Instant,
}

impl Run {
    pub fn new(command: &str) -> Self {
        Run {
            command: command.into(),
            config: serde_json::Value::Null,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn config(&mut self, config: serde_json::Value) -> &mut Self {
        self.config = config;
        self
    }

    pub fn seeds(&mut self, seeds: &[u64]) -> &mut Self {
        self.seeds = seeds.to_vec();
        self
    }

    /// Read an input file, recording its hash.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest { path: path.to_path_buf(), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    pub fn read_string(&mut self, path: &Path) -> Result<String> {
        String::from_utf8(self.read(path)?).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn output(&mut self, path: &Path, contents: impl Into<Vec<u8>>) {
        self.outputs.push((path.to_path_buf(), contents.into()));
    }

    fn hash(&self) -> String {
        let key = serde_json::json!({
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs.iter().map(|d| &d.sha256).collect::<Vec<_>>(),
        });
        sha256_hex(key.to_string().as_bytes())
    }

    /// Write all outputs and one manifest sidecar per output.
    pub fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command.clone(),
            config: self.config.clone(),
            seeds: self.seeds.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.iter().map(|(p, c)| FileDigest { path: p.clone(), sha256: sha256_hex(c) }).collect(),
            manifest_hash: self.hash(),
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        for (path, contents) in &self.outputs {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
            let side = sidecar(path);
            std::fs::write(&side, &text).with_context(|| format!("writing {}", side.display()))?;
        }
        Ok(manifest)
    }
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
