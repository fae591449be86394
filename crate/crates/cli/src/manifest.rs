use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use adaptsig_core::io;

use crate::exit::{CliResult, Context};

fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Written as `manifest.json` next to every run's artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub args: Vec<String>,
    /// Fully resolved inputs: enough to repeat the run without the original files.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<String>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            args: std::env::args().collect(),
            config: serde_json::Value::Null,
            seeds: Vec::new(),
            artifacts: Vec::new(),
            started_unix_ms: unix_ms(),
            finished_unix_ms: 0,
        }
    }

    pub fn finish(mut self, out_dir: &Path) -> CliResult<()> {
        self.finished_unix_ms = unix_ms();
        self.artifacts.push("manifest.json".into());
        io::write_json(out_dir.join("manifest.json"), &self).runtime("writing manifest")
    }
}
