use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::data::{
    load_movielens_100k, BlobSpec, ImplicitDataset, MultiClassDataset, NegativeStrategy, PlantedSpec, SplitSpec,
};
use crate::error::{Error, Result};
use crate::loss::DecaConfig;
use crate::model::ModelSpec;
use crate::train::{TaskMode, TceSchedule};

/// Where the data of an experiment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    Planted(PlantedSpec),
    Blobs(BlobSpec),
    /// A MovieLens-100K style tab-separated ratings file.
    Movielens { path: PathBuf },
    /// An implicit dataset written by `gen-data`.
    ImplicitFile { path: PathBuf },
    /// A blob dataset written by `gen-data`.
    BlobsFile { path: PathBuf },
}

pub enum Loaded {
    Implicit(ImplicitDataset),
    Classes(MultiClassDataset),
}

impl DatasetSource {
    pub fn is_implicit(&self) -> bool {
        matches!(self, Self::Planted(_) | Self::Movielens { .. } | Self::ImplicitFile { .. })
    }

    /// Loads or generates the data. Generators add `seed_shift` to their seed.
    pub fn load(&self, seed_shift: u64) -> Result<Loaded> {
        let read = |path: &Path| -> Result<Value> {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok(serde_json::from_str(&text)?)
        };
        Ok(match self {
            Self::Planted(spec) => {
                let spec = PlantedSpec { seed: spec.seed.wrapping_add(seed_shift), ..spec.clone() };
                Loaded::Implicit(spec.generate()?)
            }
            Self::Blobs(spec) => {
                let spec = BlobSpec { seed: spec.seed.wrapping_add(seed_shift), ..spec.clone() };
                Loaded::Classes(spec.generate()?)
            }
            Self::Movielens { path } => Loaded::Implicit(load_movielens_100k(path)?),
            Self::ImplicitFile { path } => Loaded::Implicit(ImplicitDataset::from_json(&read(path)?)?),
            Self::BlobsFile { path } => Loaded::Classes(MultiClassDataset::from_json(&read(path)?)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainerKind {
    Normal,
    Deca,
    /// Binary or multi-class, following the task mode.
    DecaP,
    Tce,
    Itlm,
    Ensemble,
}

impl TrainerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Deca => "deca",
            Self::DecaP => "deca-p",
            Self::Tce => "tce",
            Self::Itlm => "itlm",
            Self::Ensemble => "ensemble",
        }
    }

    pub fn supports(self, mode: TaskMode) -> bool {
        match self {
            Self::Deca | Self::Tce => mode.is_binary(),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItlmParams {
    pub keep_fraction: f64,
    pub rounds: usize,
}

impl Default for ItlmParams {
    fn default() -> Self {
        Self { keep_fraction: 0.8, rounds: 1 }
    }
}

fn default_tce() -> TceSchedule {
    TceSchedule { delta_max: 0.2, warmup_epochs: 10 }
}

fn default_ks() -> Vec<usize> {
    vec![5, 20]
}

fn default_class_split() -> [f64; 3] {
    [0.8, 0.1, 0.1]
}

/// One experiment cell: a task, its data, the models and a trainer, run
/// once per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub task: TaskMode,
    pub dataset: DatasetSource,
    /// Split of implicit data.
    #[serde(default)]
    pub split: SplitSpec,
    /// Train/valid/test ratios of classification data.
    #[serde(default = "default_class_split")]
    pub class_split: [f64; 3],
    /// Shift generator seeds by the run seed, so every seed sees fresh data.
    #[serde(default)]
    pub resample_data: bool,
    /// Target model f.
    pub model: ModelSpec,
    /// Auxiliary model g (DeCA); derived from the target when absent.
    #[serde(default)]
    pub auxiliary: Option<ModelSpec>,
    /// Binary channel models h and h'; derived from the target when absent.
    #[serde(default)]
    pub channel: Option<ModelSpec>,
    pub trainer: TrainerKind,
    #[serde(default)]
    pub deca: DecaConfig,
    #[serde(default = "default_tce")]
    pub tce: TceSchedule,
    #[serde(default)]
    pub itlm: ItlmParams,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub negatives: NegativeStrategy,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if !self.trainer.supports(self.task) {
            return bad(format!("trainer {} does not support task {}", self.trainer.name(), self.task.name()));
        }
        let implicit = self.task == TaskMode::BinaryRanking;
        if implicit != self.dataset.is_implicit() {
            return bad(format!("task {} does not fit the dataset source", self.task.name()));
        }
        if implicit && self.ks.is_empty() {
            return bad("ranking needs at least one K".into());
        }
        if self.ks.contains(&0) {
            return bad("K must be positive".into());
        }
        self.deca.validate()?;
        self.model.validate()?;
        if self.trainer == TrainerKind::Tce {
            self.tce.validate()?;
        }
        if self.trainer == TrainerKind::Itlm && !(self.itlm.keep_fraction > 0.0 && self.itlm.keep_fraction <= 1.0) {
            return bad(format!("itlm.keep_fraction = {} must lie in (0, 1]", self.itlm.keep_fraction));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON of this config.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serialises");
        sha256_hex(&value)
    }

    /// Identifies the data definition: source, split and task.
    pub fn dataset_id(&self) -> String {
        let value = serde_json::json!({
            "task": self.task,
            "dataset": self.dataset,
            "split": self.split,
            "class_split": self.class_split,
            "resample_data": self.resample_data,
        });
        sha256_hex(&value)[..16].to_string()
    }

    /// Target seed and auxiliary seed of one run.
    pub fn run_config(&self, seed: u64) -> DecaConfig {
        DecaConfig { seed, seed_aux: aux_seed(seed), ..self.deca.clone() }
    }
}

/// The auxiliary seed paired with a run seed.
pub fn aux_seed(seed: u64) -> u64 {
    crate::rng::mix(seed, crate::rng::tag::AUX_SEED) >> 11
}

fn sha256_hex(value: &Value) -> String {
    // serde_json maps are ordered by key, so this is canonical.
    let text = serde_json::to_string(value).expect("value serialises");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Fields whose value is a list by type. An array there is a grid axis only
/// when its elements are themselves arrays.
const LIST_FIELDS: &[&str] = &["seeds", "ks", "hidden", "ratios", "class_split", "per_class"];

/// One grid axis: a JSON path and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub path: Vec<String>,
    pub values: Vec<Value>,
}

impl Axis {
    pub fn name(&self) -> String {
        self.path.join(".")
    }
}

/// A concrete config and the grid coordinates that produced it.
#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub coords: Vec<(String, Value)>,
    pub config: ExperimentConfig,
}

impl Cell {
    pub fn label(&self) -> String {
        if self.coords.is_empty() {
            return "base".into();
        }
        self.coords.iter().map(|(k, v)| format!("{k}={}", scalar_text(v))).collect::<Vec<_>>().join(",")
    }
}

pub(crate) fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn find_axes(value: &Value, path: &mut Vec<String>, out: &mut Vec<Axis>) {
    let Value::Object(map) = value else { return };
    for (key, child) in map {
        path.push(key.clone());
        match child {
            Value::Array(items) => {
                let nested = items.iter().all(Value::is_array);
                let scalars = items.iter().all(|v| !v.is_array() && !v.is_object());
                let is_list = LIST_FIELDS.contains(&key.as_str());
                if !items.is_empty() && ((is_list && nested) || (!is_list && scalars)) {
                    out.push(Axis { path: path.clone(), values: items.clone() });
                }
            }
            Value::Object(_) => find_axes(child, path, out),
            _ => {}
        }
        path.pop();
    }
}

fn set_path(value: &mut Value, path: &[String], new: Value) {
    let mut cur = value;
    for key in path {
        cur = cur.get_mut(key).expect("axis path exists");
    }
    *cur = new;
}

/// The grid axes of a raw config document, in key order.
pub fn grid_axes(raw: &Value) -> Vec<Axis> {
    let mut axes = Vec::new();
    find_axes(raw, &mut Vec::new(), &mut axes);
    axes
}

/// Expands every grid axis as a Cartesian product (first axis slowest) and
/// validates each resulting config.
pub fn expand_grid(raw: &Value) -> Result<Vec<Cell>> {
    let axes = grid_axes(raw);
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut cells = Vec::with_capacity(total);
    for index in 0..total {
        let mut doc = raw.clone();
        let mut coords = Vec::with_capacity(axes.len());
        let mut rem = index;
        let mut picks = vec![0; axes.len()];
        for (a, axis) in axes.iter().enumerate().rev() {
            picks[a] = rem % axis.values.len();
            rem /= axis.values.len();
        }
        for (axis, &pick) in axes.iter().zip(&picks) {
            set_path(&mut doc, &axis.path, axis.values[pick].clone());
            coords.push((axis.name(), axis.values[pick].clone()));
        }
        let config: ExperimentConfig = serde_json::from_value(doc)
            .map_err(|e| Error::Config(format!("cell {index}: {e}")))?;
        config.validate().map_err(|e| Error::Config(format!("cell {index}: {e}")))?;
        cells.push(Cell { index, coords, config });
    }
    Ok(cells)
}

/// Reads a config document from disk.
pub fn read_config(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn base() -> Value {
        json!({
            "task": "multi-class",
            "dataset": {"blobs": {"num_classes": 3, "per_class": 20, "dim": 2, "spread": 2.0, "noise_ratio": 0.2, "seed": 1}},
            "model": {"kind": "mlp-classifier", "input_dim": 2, "hidden": [8], "num_classes": 3},
            "trainer": "normal",
            "seeds": [1, 2, 3]
        })
    }

    #[test]
    fn no_axes_gives_one_cell() {
        let cells = expand_grid(&base()).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].label(), "base");
        assert_eq!(cells[0].config.seeds, vec![1, 2, 3]);
    }

    #[test]
    fn scalar_arrays_expand_as_product() {
        let mut raw = base();
        raw["trainer"] = json!(["normal", "deca-p"]);
        raw["dataset"]["blobs"]["noise_ratio"] = json!([0.0, 0.2, 0.4]);
        raw["model"]["hidden"] = json!([[4], [8]]);
        let cells = expand_grid(&raw).unwrap();
        assert_eq!(cells.len(), 12);
        let labels: std::collections::BTreeSet<String> = cells.iter().map(Cell::label).collect();
        assert_eq!(labels.len(), 12);
        // Key order: dataset < model < trainer; the last axis varies fastest.
        assert_eq!(cells[0].label(), "dataset.blobs.noise_ratio=0.0,model.hidden=[4],trainer=normal");
        assert_eq!(cells[1].label(), "dataset.blobs.noise_ratio=0.0,model.hidden=[4],trainer=deca-p");
        assert_eq!(cells[11].config.model.hidden, vec![8]);
    }

    #[test]
    fn list_fields_are_not_axes() {
        let axes = grid_axes(&base());
        assert!(axes.is_empty(), "{axes:?}");
    }

    #[test]
    fn invalid_cells_are_rejected_before_running() {
        let mut raw = base();
        raw["trainer"] = json!(["normal", "tce"]);
        assert!(matches!(expand_grid(&raw), Err(Error::Config(_))));
        let mut raw = base();
        raw["seeds"] = json!([]);
        assert!(expand_grid(&raw).is_err());
        let mut raw = base();
        raw["task"] = json!("binary-ranking");
        assert!(expand_grid(&raw).is_err());
    }

    #[test]
    fn hashes_track_content() {
        let a = expand_grid(&base()).unwrap().remove(0).config;
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.deca.learn_rate = 0.5;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.dataset_id(), b.dataset_id());
        b.trainer = TrainerKind::DecaP;
        assert_eq!(a.dataset_id(), b.dataset_id());
        b.class_split = [0.6, 0.2, 0.2];
        assert_ne!(a.dataset_id(), b.dataset_id());
    }

    #[test]
    fn aux_seed_differs_from_seed() {
        for s in 0..1000 {
            assert_ne!(aux_seed(s), s);
        }
    }
}
