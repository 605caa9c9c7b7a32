//! Run manifests written next to every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// What produced an output file. Contains no timestamps or host details, so
/// identical runs write identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_paths: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    /// Every pipeline is deterministic; no random seed is involved.
    pub seed: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_paths: Vec::new(),
            parameters: BTreeMap::new(),
            seed: "n/a".into(),
        }
    }

    pub fn param(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    /// Adds every entry under `prefix.`.
    pub fn params(&mut self, prefix: &str, values: &BTreeMap<String, String>) -> &mut Self {
        for (k, v) in values {
            self.parameters.insert(format!("{prefix}.{k}"), v.clone());
        }
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
