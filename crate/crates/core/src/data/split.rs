use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ImplicitDataset;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    Chronological,
    Random,
}

/// Which test interactions count as clean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CleanRule {
    RatingEquals(u8),
    RatingAtLeast(u8),
    /// Use the stored hidden truth (synthetic data).
    HiddenTruth,
    /// Keep every test interaction.
    All,
}

impl Default for CleanRule {
    fn default() -> Self {
        CleanRule::RatingEquals(5)
    }
}

impl CleanRule {
    fn holds(&self, ds: &ImplicitDataset, idx: usize) -> bool {
        let rating = ds.interactions[idx].rating;
        match *self {
            CleanRule::RatingEquals(r) => rating == Some(r),
            CleanRule::RatingAtLeast(r) => rating.is_some_and(|x| x >= r),
            CleanRule::HiddenTruth => ds.true_labels[idx] == 1,
            CleanRule::All => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub ratios: [f64; 3],
    #[serde(default)]
    pub clean_rule: CleanRule,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            mode: SplitMode::Random,
            ratios: [0.8, 0.1, 0.1],
            clean_rule: CleanRule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitStatus {
    Ok,
    /// No test interaction satisfied the clean rule.
    EmptyCleanTest,
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: ImplicitDataset,
    pub valid: ImplicitDataset,
    /// Test interactions that satisfy the clean rule.
    pub test: ImplicitDataset,
    /// Every interaction assigned to the test partition.
    pub test_raw: ImplicitDataset,
    pub status: SplitStatus,
}

/// Per-user split of the interactions into train/valid/test.
///
/// Each user's interactions are ordered (by timestamp, or shuffled) and cut
/// at `round(ratio * n)`, so every split is within one example of its ratio
/// for each user.
pub fn split(dataset: &ImplicitDataset, spec: &SplitSpec, seed: u64) -> Result<Splits> {
    let sum: f64 = spec.ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || spec.ratios.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
        return Err(Error::Config(format!("split ratios {:?} must be in [0,1] and sum to 1", spec.ratios)));
    }
    if spec.mode == SplitMode::Chronological
        && dataset.interactions.iter().any(|it| it.timestamp.is_none())
    {
        return Err(Error::Config("chronological split requires timestamps on every interaction".into()));
    }

    let mut per_user: Vec<Vec<usize>> = vec![Vec::new(); dataset.num_users];
    for (idx, it) in dataset.interactions.iter().enumerate() {
        per_user[it.user as usize].push(idx);
    }

    let mut rng = rng::stream(seed, tag::SPLIT);
    let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for idxs in &mut per_user {
        match spec.mode {
            SplitMode::Chronological => {
                idxs.sort_by_key(|&i| (dataset.interactions[i].timestamp, i));
            }
            SplitMode::Random => idxs.shuffle(&mut rng),
        }
        let n = idxs.len();
        let n_train = ((spec.ratios[0] * n as f64).round() as usize).min(n);
        let n_valid = ((spec.ratios[1] * n as f64).round() as usize).min(n - n_train);
        train.extend_from_slice(&idxs[..n_train]);
        valid.extend_from_slice(&idxs[n_train..n_train + n_valid]);
        test.extend_from_slice(&idxs[n_train + n_valid..]);
    }
    for part in [&mut train, &mut valid, &mut test] {
        part.sort_unstable();
    }

    let clean: Vec<usize> = test
        .iter()
        .copied()
        .filter(|&i| spec.clean_rule.holds(dataset, i))
        .collect();
    let status = if clean.is_empty() {
        log::warn!("clean test set is empty under rule {:?}", spec.clean_rule);
        SplitStatus::EmptyCleanTest
    } else {
        SplitStatus::Ok
    };

    Ok(Splits {
        train: dataset.subset(&train),
        valid: dataset.subset(&valid),
        test: dataset.subset(&clean),
        test_raw: dataset.subset(&test),
        status,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::data::{gen_planted_implicit, Interaction};

    fn single_user(n: usize, ratings: impl Fn(usize) -> u8) -> ImplicitDataset {
        let interactions = (0..n)
            .map(|i| Interaction {
                user: 0,
                item: i as u32,
                rating: Some(ratings(i)),
                timestamp: Some(1000 - i as i64),
            })
            .collect();
        ImplicitDataset::new(1, n, interactions, vec![1; n], BTreeSet::new(), false).unwrap()
    }

    #[test]
    fn ten_interactions_split_eight_one_one() {
        let ds = single_user(10, |_| 5);
        let s = split(&ds, &SplitSpec::default(), 3).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test_raw.len()), (8, 1, 1));
        assert_eq!(s.status, SplitStatus::Ok);
    }

    #[test]
    fn empty_clean_test_is_flagged() {
        let ds = single_user(10, |_| 3);
        let s = split(&ds, &SplitSpec::default(), 3).unwrap();
        assert!(s.test.is_empty());
        assert_eq!(s.test_raw.len(), 1);
        assert_eq!(s.status, SplitStatus::EmptyCleanTest);
    }

    #[test]
    fn chronological_orders_per_user() {
        let ds = single_user(20, |i| (i % 5 + 1) as u8);
        let spec = SplitSpec {
            mode: SplitMode::Chronological,
            ..SplitSpec::default()
        };
        let s = split(&ds, &spec, 0).unwrap();
        let max_train = s.train.interactions.iter().map(|i| i.timestamp.unwrap()).max().unwrap();
        let min_test = s.test_raw.interactions.iter().map(|i| i.timestamp.unwrap()).min().unwrap();
        assert!(max_train <= min_test);
    }

    #[test]
    fn chronological_without_timestamps_is_config_error() {
        let ds = gen_planted_implicit(10, 10, 2, 0.1, 0.0, 1).unwrap();
        let spec = SplitSpec {
            mode: SplitMode::Chronological,
            ..SplitSpec::default()
        };
        assert!(matches!(split(&ds, &spec, 0), Err(Error::Config(_))));
    }

    #[test]
    fn bad_ratios_rejected() {
        let ds = single_user(10, |_| 5);
        let spec = SplitSpec {
            ratios: [0.8, 0.1, 0.2],
            ..SplitSpec::default()
        };
        assert!(split(&ds, &spec, 0).is_err());
    }

    #[test]
    fn random_split_partitions_and_is_deterministic() {
        let ds = gen_planted_implicit(30, 25, 3, 0.2, 0.0, 4).unwrap();
        let spec = SplitSpec {
            clean_rule: CleanRule::HiddenTruth,
            ..SplitSpec::default()
        };
        let a = split(&ds, &spec, 9).unwrap();
        let b = split(&ds, &spec, 9).unwrap();
        assert_eq!(a.train, b.train);
        let key = |d: &ImplicitDataset| -> Vec<(u32, u32)> { d.interactions.iter().map(|i| (i.user, i.item)).collect() };
        let mut all: Vec<(u32, u32)> = [key(&a.train), key(&a.valid), key(&a.test_raw)].concat();
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(n, all.len(), "splits overlap");
        assert_eq!(n, ds.len(), "splits do not cover the dataset");
        assert!(a.test.true_labels.iter().all(|&l| l == 1));
    }
}
