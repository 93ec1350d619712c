use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{aux_seed, ExperimentConfig, TrainerKind};
use super::run::{classification_train, train_with, Prepared};
use crate::error::{Error, Result};
use crate::eval::{disagreement_binary, disagreement_multiclass, rating_bucket_probability, DisagreementReport, RatingStudy};
use crate::loss::PosteriorMode;
use crate::model::Input;
use crate::train::TaskMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementRun {
    pub seed_a: u64,
    pub seed_b: u64,
    pub report: DisagreementReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementStudy {
    pub trainer: String,
    pub runs: Vec<DisagreementRun>,
    /// Repetitions where noisy examples disagree strictly more than clean ones.
    pub noisy_above_clean: usize,
}

/// Trains the configured trainer twice per seed (seeds `s` and its paired
/// auxiliary seed) on the same data and compares the two models on the
/// training examples, split by hidden truth.
pub fn diagnose_disagreement(cfg: &ExperimentConfig) -> Result<DisagreementStudy> {
    cfg.validate()?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let prepared = Prepared::new(cfg, seed)?;
        let seed_b = aux_seed(seed);
        let a = train_with(cfg, &prepared, seed)?.predictor();
        let b = train_with(cfg, &prepared, seed_b)?.predictor();
        let report = match (&prepared, cfg.task) {
            (Prepared::Ranking { task, .. }, _) => {
                let train = &task.splits.train;
                let pairs = |label: u8| -> Vec<Input> {
                    train
                        .interactions
                        .iter()
                        .zip(&train.true_labels)
                        .filter(|(_, &l)| l == label)
                        .map(|(it, _)| Input::Pair { user: it.user, item: it.item })
                        .collect()
                };
                disagreement_binary(a.as_ref(), b.as_ref(), &pairs(1), &pairs(0))?
            }
            (_, TaskMode::MultiClass) => disagreement_multiclass(a.as_ref(), b.as_ref(), classification_train(&prepared).unwrap())?,
            (_, _) => {
                let data = classification_train(&prepared).unwrap();
                let rows = |noisy: bool| -> Vec<Input> {
                    (0..data.len()).filter(|&i| data.is_noisy(i) == noisy).map(|i| Input::Dense(data.row(i))).collect()
                };
                disagreement_binary(a.as_ref(), b.as_ref(), &rows(false), &rows(true))?
            }
        };
        log::info!("seed {seed}: disagreement clean {:.4} noisy {:.4}", report.mean_diff_clean, report.mean_diff_noisy);
        runs.push(DisagreementRun { seed_a: seed, seed_b, report });
    }
    let noisy_above_clean = runs.iter().filter(|r| r.report.mean_diff_noisy > r.report.mean_diff_clean).count();
    Ok(DisagreementStudy { trainer: cfg.trainer.name().into(), runs, noisy_above_clean })
}

impl DisagreementStudy {
    /// Rows `(x, series, y)`: per seed, clean and noisy mean difference.
    pub fn plot_rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = Vec::new();
        for r in &self.runs {
            rows.push((r.seed_a.to_string(), "clean".to_string(), r.report.mean_diff_clean));
            rows.push((r.seed_a.to_string(), "noisy".to_string(), r.report.mean_diff_noisy));
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRun {
    pub seed: u64,
    pub study: RatingStudy,
}

/// Trains DeCA or DeCA(p) per seed and groups the rated interactions of the
/// full dataset by rating, averaging the real-positive probability.
pub fn rating_study(cfg: &ExperimentConfig) -> Result<Vec<RatingRun>> {
    cfg.validate()?;
    let mode = match cfg.trainer {
        TrainerKind::Deca => PosteriorMode::Deca,
        TrainerKind::DecaP => PosteriorMode::DecaP,
        other => {
            return Err(Error::Config(format!("rating study needs deca or deca-p, got {}", other.name())));
        }
    };
    if cfg.task != TaskMode::BinaryRanking {
        return Err(Error::Config("rating study needs a binary-ranking task".into()));
    }
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        let prepared = Prepared::new(cfg, seed)?;
        let trained = train_with(cfg, &prepared, seed)?;
        let Prepared::Ranking { full, .. } = &prepared else { unreachable!("checked task mode") };
        let (h, hp) = (trained.h.as_ref(), trained.h_prime.as_ref());
        let (Some(h), Some(hp)) = (h, hp) else {
            return Err(Error::Contract("trainer returned no channel models".into()));
        };
        let study = rating_bucket_probability(&trained.target, h, hp, full, mode)?;
        log::info!("seed {seed}: rating spearman {:?}", study.spearman);
        out.push(RatingRun { seed, study });
    }
    Ok(out)
}

/// Rows `(x, series, y)`: rating, seed, bucket mean.
pub fn rating_plot_rows(runs: &[RatingRun]) -> Vec<(String, String, f64)> {
    runs.iter()
        .flat_map(|r| r.study.buckets.iter().map(move |(k, b)| (k.to_string(), format!("seed {}", r.seed), b.mean)))
        .collect()
}

/// Writes a study as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}
