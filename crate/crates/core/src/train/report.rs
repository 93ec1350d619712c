use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::DecaConfig;

/// Current report schema. Readers accept any minor version of the same major.
pub const REPORT_SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid: BTreeMap<String, f64>,
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub trainer: String,
    pub task: String,
    /// Identifies the dataset; comparisons require equal ids.
    #[serde(default)]
    pub dataset_id: String,
    pub config: DecaConfig,
    #[serde(default)]
    pub config_hash: String,
    /// Seeds of the target (s1) and of the re-initialised or auxiliary model (s2).
    pub seeds: [u64; 2],
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Validation metrics of the returned snapshot.
    pub valid: BTreeMap<String, f64>,
    pub test: BTreeMap<String, f64>,
    #[serde(default)]
    pub audit: serde_json::Value,
    /// Excluded from every CSV artifact.
    #[serde(default)]
    pub wall_clock_secs: f64,
}

impl RunReport {
    pub(crate) fn new(trainer: &str, task: &str, config: &DecaConfig) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION.into(),
            trainer: trainer.into(),
            task: task.into(),
            dataset_id: String::new(),
            config: config.clone(),
            config_hash: String::new(),
            seeds: [config.seed, config.seed_aux],
            epochs: Vec::new(),
            best_epoch: 0,
            stopped_early: false,
            valid: BTreeMap::new(),
            test: BTreeMap::new(),
            audit: serde_json::Value::Null,
            wall_clock_secs: 0.0,
        }
    }

    /// A copy with the wall-clock time zeroed, for equality checks.
    pub fn without_timing(&self) -> Self {
        Self { wall_clock_secs: 0.0, ..self.clone() }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a report, rejecting unknown major schema versions.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("schema_version").and_then(|v| v.as_str()).unwrap_or("");
        let major = REPORT_SCHEMA_VERSION.split('.').next();
        if version.split('.').next() != major || version.is_empty() {
            return Err(Error::SchemaVersion(version.to_string()));
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Rows `(epoch, split, metric, value)`: the training loss and every
    /// validation metric per epoch.
    pub fn epoch_rows(&self) -> Vec<(usize, &'static str, String, f64)> {
        let mut rows = Vec::new();
        for e in &self.epochs {
            rows.push((e.epoch, "train", "loss".to_string(), e.train_loss));
            for (k, v) in &e.valid {
                rows.push((e.epoch, "valid", k.clone(), *v));
            }
        }
        rows
    }
}
