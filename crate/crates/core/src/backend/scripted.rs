use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DecisionProvider, DecisionRequest, ProviderError, ProviderResponse, RequestKey};

/// One canned answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(flatten)]
    pub key: RequestKey,
    pub raw_text: String,
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Syntax {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate script entry for {0}")]
    Duplicate(RequestKey),
}

/// Reads a JSON array of [`ScriptEntry`] values.
pub fn load_script(path: impl AsRef<Path>) -> Result<Vec<ScriptEntry>, ScriptError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScriptError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ScriptError::Syntax {
        path: path.to_path_buf(),
        source,
    })
}

/// Replays canned answers. Never touches the network; latency is always 0.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider {
    table: HashMap<RequestKey, String>,
}

impl ScriptedProvider {
    pub fn new(entries: impl IntoIterator<Item = ScriptEntry>) -> Result<Self, ScriptError> {
        let mut table = HashMap::new();
        for e in entries {
            if table.contains_key(&e.key) {
                return Err(ScriptError::Duplicate(e.key));
            }
            table.insert(e.key, e.raw_text);
        }
        Ok(Self { table })
    }

    /// Loads and merges several script files.
    pub fn from_files<P: AsRef<Path>>(paths: &[P]) -> Result<Self, ScriptError> {
        let mut all = Vec::new();
        for p in paths {
            all.extend(load_script(p)?);
        }
        Self::new(all)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl DecisionProvider for ScriptedProvider {
    fn decide(&self, req: &DecisionRequest<'_>) -> Result<ProviderResponse, ProviderError> {
        let raw = self
            .table
            .get(req.key)
            .ok_or_else(|| ProviderError::Configuration(format!("no script entry for {}", req.key)))?;
        Ok(ProviderResponse {
            raw_text: raw.clone(),
            latency: 0.0,
            requests: 1,
            usage: None,
        })
    }
}
