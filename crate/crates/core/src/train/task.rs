//! Training tasks: where examples come from and how runs are scored.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{MultiClassDataset, MultiClassSplit, NegativeSampler, NegativeStrategy, Splits};
use crate::error::{Error, Result};
use crate::eval::{accuracy, binary_accuracy, recall_ndcg};
use crate::loss::{ClassExample, Labeled};
use crate::model::{Input, ModelKind, ModelSpec, Predictor};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskMode {
    BinaryRanking,
    BinaryGeneric,
    MultiClass,
}

impl TaskMode {
    pub fn name(self) -> &'static str {
        match self {
            TaskMode::BinaryRanking => "binary-ranking",
            TaskMode::BinaryGeneric => "binary-generic",
            TaskMode::MultiClass => "multi-class",
        }
    }

    pub fn is_binary(self) -> bool {
        self != TaskMode::MultiClass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sample {
    Pair { user: u32, item: u32 },
    Row(usize),
}

/// One training example. `key` identifies examples that belong to the
/// fixed training set (observed interactions, dataset rows); sampled
/// negatives have none.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainItem {
    pub sample: Sample,
    pub label: usize,
    pub key: Option<usize>,
}

pub trait Task: Sync {
    fn mode(&self) -> TaskMode;

    /// Size of the keyed training set.
    fn num_keys(&self) -> usize;

    /// Hidden truth: whether the observed label of `key` is wrong.
    fn is_noisy(&self, key: usize) -> bool;

    /// Training items of `keys` in their natural order, without sampling.
    fn key_items(&self, keys: &[usize]) -> Vec<TrainItem>;

    /// One shuffled epoch over `keys` (all when `None`), with sampled
    /// negatives where the task needs them.
    fn epoch_items(&self, keys: Option<&[usize]>, seed: u64, epoch: usize) -> Result<Vec<TrainItem>>;

    /// Items per minibatch instance (a positive and its negative count as one).
    fn items_per_instance(&self) -> usize {
        1
    }

    fn input(&self, sample: Sample) -> Input<'_>;

    fn valid_metrics(&self, model: &dyn Predictor) -> Result<BTreeMap<String, f64>>;

    fn test_metrics(&self, model: &dyn Predictor) -> Result<BTreeMap<String, f64>>;

    /// Validation metric maximised by early stopping.
    fn early_stop_metric(&self) -> String;

    /// Structure of the auxiliary model g for a target spec.
    fn aux_spec(&self, target: &ModelSpec) -> ModelSpec;

    /// Structure of the binary channel models h and h'.
    fn channel_spec(&self, target: &ModelSpec) -> ModelSpec;

    /// Checks that a target spec fits this task.
    fn check_target(&self, spec: &ModelSpec) -> Result<()>;

    fn labeled(&self, items: &[TrainItem]) -> Vec<Labeled<'_>> {
        items.iter().map(|it| Labeled { input: self.input(it.sample), label: it.label as u8 }).collect()
    }

    fn class_examples(&self, items: &[TrainItem]) -> Vec<ClassExample<'_>> {
        items
            .iter()
            .map(|it| match self.input(it.sample) {
                Input::Dense(features) => ClassExample { features, label: it.label },
                _ => unreachable!("class examples come from dense rows"),
            })
            .collect()
    }
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    rng::mix(seed, epoch as u64)
}

/// Implicit-feedback ranking: observed positives plus one sampled negative
/// each, redrawn every epoch.
pub struct RankingTask {
    pub splits: Splits,
    pub ks: Vec<usize>,
    sampler: NegativeSampler,
}

impl RankingTask {
    pub fn new(splits: Splits, ks: Vec<usize>, strategy: NegativeStrategy) -> Result<Self> {
        if ks.is_empty() || ks.contains(&0) {
            return Err(Error::Config(format!("ranking cutoffs {ks:?} must be non-empty and positive")));
        }
        let sampler = NegativeSampler::new(&splits.train, strategy);
        Ok(Self { splits, ks, sampler })
    }
}

impl Task for RankingTask {
    fn mode(&self) -> TaskMode {
        TaskMode::BinaryRanking
    }

    fn num_keys(&self) -> usize {
        self.splits.train.len()
    }

    fn is_noisy(&self, key: usize) -> bool {
        self.splits.train.true_labels[key] == 0
    }

    fn key_items(&self, keys: &[usize]) -> Vec<TrainItem> {
        keys.iter()
            .map(|&k| {
                let it = &self.splits.train.interactions[k];
                TrainItem { sample: Sample::Pair { user: it.user, item: it.item }, label: 1, key: Some(k) }
            })
            .collect()
    }

    fn epoch_items(&self, keys: Option<&[usize]>, seed: u64, epoch: usize) -> Result<Vec<TrainItem>> {
        let mut order: Vec<usize> = match keys {
            Some(k) => k.to_vec(),
            None => (0..self.num_keys()).collect(),
        };
        let s = epoch_seed(seed, epoch);
        order.shuffle(&mut rng::stream(s, tag::SHUFFLE));
        let positives: Vec<(u32, u32)> = order
            .iter()
            .map(|&k| {
                let it = &self.splits.train.interactions[k];
                (it.user, it.item)
            })
            .collect();
        let negatives = self.sampler.sample(&positives, &mut rng::stream(s, tag::NEGATIVES))?;
        let mut items = Vec::with_capacity(2 * order.len());
        for ((&k, &(user, item)), &(nu, ni)) in order.iter().zip(&positives).zip(&negatives) {
            items.push(TrainItem { sample: Sample::Pair { user, item }, label: 1, key: Some(k) });
            items.push(TrainItem { sample: Sample::Pair { user: nu, item: ni }, label: 0, key: None });
        }
        Ok(items)
    }

    fn items_per_instance(&self) -> usize {
        2
    }

    fn input(&self, sample: Sample) -> Input<'_> {
        match sample {
            Sample::Pair { user, item } => Input::Pair { user, item },
            Sample::Row(_) => unreachable!("ranking samples are pairs"),
        }
    }

    fn valid_metrics(&self, model: &dyn Predictor) -> Result<BTreeMap<String, f64>> {
        Ok(recall_ndcg(model, &self.splits.train, &self.splits.valid, &self.ks)?.named())
    }

    fn test_metrics(&self, model: &dyn Predictor) -> Result<BTreeMap<String, f64>> {
        Ok(recall_ndcg(model, &self.splits.train, &self.splits.test, &self.ks)?.named())
    }

    fn early_stop_metric(&self) -> String {
        format!("recall@{}", self.ks.iter().max().expect("validated"))
    }

    fn aux_spec(&self, target: &ModelSpec) -> ModelSpec {
        ModelSpec { kind: ModelKind::Mf, ..target.clone() }
    }

    fn channel_spec(&self, target: &ModelSpec) -> ModelSpec {
        ModelSpec::h_pairwise(target.num_users, target.num_items, target.latent_dim).with_init_scale(target.init_scale)
    }

    fn check_target(&self, spec: &ModelSpec) -> Result<()> {
        let t = &self.splits.train;
        if !spec.kind.is_pairwise() || spec.num_users != t.num_users || spec.num_items != t.num_items {
            return Err(Error::Config(format!(
                "ranking needs a pairwise model over {}x{}, got {:?} over {}x{}",
                t.num_users, t.num_items, spec.kind, spec.num_users, spec.num_items
            )));
        }
        Ok(())
    }
}

/// Classification on dense features, binary (two classes, class 1
/// positive) or multi-class. Validation scores against observed labels.
pub struct ClassificationTask {
    pub mode: TaskMode,
    pub split: MultiClassSplit,
    valid_observed: MultiClassDataset,
}

impl ClassificationTask {
    pub fn new(split: MultiClassSplit, binary: bool) -> Result<Self> {
        let classes = split.train.num_classes;
        if binary && classes != 2 {
            return Err(Error::Config(format!("binary classification needs 2 classes, got {classes}")));
        }
        if split.train.is_empty() || split.valid.is_empty() || split.test.is_empty() {
            return Err(Error::Config("classification needs non-empty train, valid and test splits".into()));
        }
        let mut valid_observed = split.valid.clone();
        valid_observed.true_labels = valid_observed.noisy_labels.clone();
        let mode = if binary { TaskMode::BinaryGeneric } else { TaskMode::MultiClass };
        Ok(Self { mode, split, valid_observed })
    }

    pub fn num_classes(&self) -> usize {
        self.split.train.num_classes
    }

    fn score(&self, model: &dyn Predictor, data: &MultiClassDataset) -> Result<BTreeMap<String, f64>> {
        let acc = if self.mode.is_binary() { binary_accuracy(model, data)? } else { accuracy(model, data)? };
        Ok(BTreeMap::from([("accuracy".to_string(), acc)]))
    }
}

impl Task for ClassificationTask {
    fn mode(&self) -> TaskMode {
        self.mode
    }

    fn num_keys(&self) -> usize {
        self.split.train.len()
    }

    fn is_noisy(&self, key: usize) -> bool {
        self.split.train.is_noisy(key)
    }

    fn key_items(&self, keys: &[usize]) -> Vec<TrainItem> {
        keys.iter()
            .map(|&k| TrainItem { sample: Sample::Row(k), label: self.split.train.noisy_labels[k], key: Some(k) })
            .collect()
    }

    fn epoch_items(&self, keys: Option<&[usize]>, seed: u64, epoch: usize) -> Result<Vec<TrainItem>> {
        let mut order: Vec<usize> = match keys {
            Some(k) => k.to_vec(),
            None => (0..self.num_keys()).collect(),
        };
        order.shuffle(&mut rng::stream(epoch_seed(seed, epoch), tag::SHUFFLE));
        Ok(self.key_items(&order))
    }

    fn input(&self, sample: Sample) -> Input<'_> {
        match sample {
            Sample::Row(i) => Input::Dense(self.split.train.row(i)),
            Sample::Pair { .. } => unreachable!("classification samples are rows"),
        }
    }

    fn valid_metrics(&self, model: &dyn Predictor) -> Result<BTreeMap<String, f64>> {
        self.score(model, &self.valid_observed)
    }

    fn test_metrics(&self, model: &dyn Predictor) -> Result<BTreeMap<String, f64>> {
        self.score(model, &self.split.test)
    }

    fn early_stop_metric(&self) -> String {
        "accuracy".into()
    }

    fn aux_spec(&self, target: &ModelSpec) -> ModelSpec {
        ModelSpec::logistic(self.split.train.dim).with_seed(target.seed).with_init_scale(target.init_scale)
    }

    fn channel_spec(&self, target: &ModelSpec) -> ModelSpec {
        self.aux_spec(target)
    }

    fn check_target(&self, spec: &ModelSpec) -> Result<()> {
        let dim = self.split.train.dim;
        let ok = if self.mode.is_binary() {
            matches!(spec.kind, ModelKind::MlpBinary | ModelKind::Logistic) && spec.input_dim == dim
        } else {
            spec.kind == ModelKind::MlpClassifier && spec.input_dim == dim && spec.num_classes == self.num_classes()
        };
        if !ok {
            return Err(Error::Config(format!(
                "{} task over {dim} features and {} classes cannot train {:?} (input {}, classes {})",
                self.mode.name(),
                self.num_classes(),
                spec.kind,
                spec.input_dim,
                spec.num_classes
            )));
        }
        Ok(())
    }
}
