use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Record written next to the outputs of every successful command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    /// Effective configuration after defaults, config file and flags.
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Headline numbers of the run, e.g. `cycle_skip_rate` for `parse`.
    pub metrics: Value,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn read(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// What a command hands back for its manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub metrics: Value,
}

impl Outcome {
    pub(crate) fn into_manifest(self, command: &str, elapsed: Duration) -> RunManifest {
        RunManifest {
            command: command.to_owned(),
            version: VERSION.to_owned(),
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            metrics: self.metrics,
            duration_secs: elapsed.as_secs_f64(),
        }
    }
}
