use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Record of one invocation: enough to repeat it on the same inputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub args: Vec<String>,
    /// SHA-256 of every input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub exit_code: i32,
    /// Wall-clock milliseconds per stage, in execution order.
    pub timings_ms: Vec<(String, f64)>,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: Vec<String>) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            args,
            inputs: BTreeMap::new(),
            config: serde_json::Value::Null,
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            exit_code: 0,
            timings_ms: Vec::new(),
        }
    }

    /// Reads an input file and records its hash.
    pub fn read_input(&mut self, path: &Path) -> std::io::Result<String> {
        let bytes = std::fs::read(path)?;
        self.inputs.insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        String::from_utf8(bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings_ms.push((stage.to_string(), start.elapsed().as_secs_f64() * 1e3));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is plain data") + "\n"
    }
}
