use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliError;

/// Everything needed to repeat a command. `created_unix_ms` is the only
/// field that differs between identical invocations.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Fully resolved settings, defaults included.
    pub settings: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// FNV-1a of each input file, as 16 hex digits.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
    pub versions: BTreeMap<String, String>,
    pub created_unix_ms: u128,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config_path: Option<&Path>,
        out_dir: &Path,
        settings: impl Serialize,
    ) -> Self {
        let versions = BTreeMap::from([
            (
                "latent-guard-core".to_string(),
                latent_guard::VERSION.to_string(),
            ),
            (
                "latent-guard-cli".to_string(),
                env!("CARGO_PKG_VERSION").to_string(),
            ),
        ]);
        Self {
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            out_dir: out_dir.to_path_buf(),
            settings: serde_json::to_value(settings).unwrap_or(serde_json::Value::Null),
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            versions,
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    pub fn input(mut self, path: &Path) -> Result<Self, CliError> {
        let digest = if path.is_dir() {
            "directory".to_string()
        } else {
            format!("{:016x}", latent_guard::fnv1a64(&fs::read(path)?))
        };
        self.inputs.insert(path.display().to_string(), digest);
        Ok(self)
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    /// Writes the manifest next to `primary`: `<dir>/manifest.json` for a
    /// directory, `<stem>.manifest.json` for a file.
    pub fn write_for(&self, primary: &Path) -> Result<PathBuf, CliError> {
        let path = if primary.is_dir() {
            primary.join("manifest.json")
        } else {
            primary.with_extension("manifest.json")
        };
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
