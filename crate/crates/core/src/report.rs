//! Persisted experiment records: a JSON report that embeds the exact
//! configuration and its SHA-256, plus CSV tables for sweeps.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    /// Typed parameters; keys are serialized in sorted order.
    pub params: Value,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn new(command: impl Into<String>, params: Value, master_seed: u64) -> Self {
        ExperimentConfig { command: command.into(), params, master_seed }
    }

    /// Hex SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// A run's config, its hash and its result. Contains no timestamps or
/// timings, so identical configs on the same build give identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub result: T,
}

impl<T: Serialize> ExperimentReport<T> {
    pub fn new(config: ExperimentConfig, result: T) -> Self {
        let config_hash = config.hash();
        ExperimentReport { tool: "rrg", version: env!("CARGO_PKG_VERSION"), config, config_hash, result }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }
}

/// Writes one CSV row per element of `rows`.
pub fn write_csv<S: Serialize, W: Write>(out: W, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

/// Convenience for building `params`.
pub fn params(pairs: &[(&str, Value)]) -> Value {
    let map: serde_json::Map<String, Value> = pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    json!(map)
}
