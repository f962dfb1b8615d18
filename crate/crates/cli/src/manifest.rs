//! Manifests written next to each step's outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use hopeml_core::pipeline::{Timestamps, TOOL_VERSION};
use hopeml_core::preprocess::lexicon_digest;

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(lexicon_digest(&bytes))
}

#[derive(Debug, Serialize)]
pub struct StepManifest {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub parameters: Value,
    /// SHA-256 of every input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

impl StepManifest {
    pub fn new(command: &'static str, parameters: Value, inputs: &[&Path]) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| Ok((p.display().to_string(), file_digest(p)?)))
            .collect::<Result<_>>()?;
        Ok(StepManifest {
            tool_version: TOOL_VERSION,
            command,
            parameters,
            inputs,
            outputs: Vec::new(),
            timestamps: None,
        })
    }

    /// Same content without timestamps, for embedding in reports.
    pub fn timeless(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        if let Value::Object(map) = &mut v {
            map.remove("timestamps");
        }
        v
    }

    /// Writes `<primary output>.manifest.json`.
    pub fn finish(mut self, started: u64, outputs: &[&Path]) -> Result<PathBuf> {
        self.outputs = outputs.iter().map(|p| p.to_path_buf()).collect();
        self.timestamps = Some(Timestamps {
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
        });
        let primary = outputs.first().context("step has no outputs")?;
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
