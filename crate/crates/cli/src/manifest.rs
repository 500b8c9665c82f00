//! The record each command leaves next to its outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::io;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Effective settings after flags, config file and defaults were merged.
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Wall-clock seconds per phase. The only field that varies between
    /// identical runs.
    pub timings_seconds: BTreeMap<String, f64>,
}

/// Manifest location for an output file; `None` for standard output.
pub fn manifest_path(output: &Path) -> Option<PathBuf> {
    if io::is_std(output) {
        return None;
    }
    let mut name = output.file_name()?.to_os_string();
    name.push(".manifest.json");
    Some(output.with_file_name(name))
}

pub struct Recorder {
    manifest: RunManifest,
    start: Instant,
    phase_start: Instant,
}

impl Recorder {
    pub fn new(command: &str, config: impl Serialize) -> anyhow::Result<Self> {
        let now = Instant::now();
        Ok(Recorder {
            manifest: RunManifest {
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config: serde_json::to_value(config)?,
                seeds: BTreeMap::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                timings_seconds: BTreeMap::new(),
            },
            start: now,
            phase_start: now,
        })
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.manifest.seeds.insert(name.to_string(), seed);
    }

    pub fn input(&mut self, p: &Path) {
        self.manifest.inputs.push(p.display().to_string());
    }

    pub fn output(&mut self, p: &Path) {
        self.manifest.outputs.push(p.display().to_string());
    }

    /// Closes the current phase under `name`.
    pub fn phase(&mut self, name: &str) {
        let now = Instant::now();
        self.manifest.timings_seconds.insert(name.to_string(), (now - self.phase_start).as_secs_f64());
        self.phase_start = now;
    }

    /// Writes the manifest to `path`, if any.
    pub fn finish(mut self, path: Option<PathBuf>) -> anyhow::Result<()> {
        let Some(path) = path else { return Ok(()) };
        self.manifest.timings_seconds.insert("total".into(), self.start.elapsed().as_secs_f64());
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        io::write(&path, text.as_bytes())
    }
}
