use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::ImplicitDataset;
use crate::error::{Error, Result};
use crate::model::{Input, Predictor};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub recall: BTreeMap<usize, f64>,
    pub ndcg: BTreeMap<usize, f64>,
    pub users_evaluated: usize,
    /// Users with test positives but no candidate items.
    pub users_skipped: usize,
}

impl RankingMetrics {
    /// Flat `recall@K` / `ndcg@K` map.
    pub fn named(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.recall {
            out.insert(format!("recall@{k}"), *v);
        }
        for (k, v) in &self.ndcg {
            out.insert(format!("ndcg@{k}"), *v);
        }
        out
    }
}

/// Per-user (recall@K, ndcg@K) for each K, or `None` without candidates.
fn user_metrics(
    model: &dyn Predictor,
    user: u32,
    num_items: usize,
    train_items: &[u32],
    positives: &[u32],
    ks: &[usize],
) -> Option<Vec<(f64, f64)>> {
    let mut scored: Vec<(f64, u32)> = (0..num_items as u32)
        .filter(|i| train_items.binary_search(i).is_err())
        .map(|item| (model.score(&Input::Pair { user, item }), item))
        .collect();
    if scored.is_empty() {
        return None;
    }
    // Descending score, ascending item id on ties.
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let relevant: Vec<bool> = scored.iter().map(|(_, i)| positives.binary_search(i).is_ok()).collect();
    let n_pos = relevant.iter().filter(|&&r| r).count();
    if n_pos == 0 {
        return None;
    }
    let gain = |rank: usize| 1.0 / ((rank + 2) as f64).log2();
    Some(
        ks.iter()
            .map(|&k| {
                let top = k.min(relevant.len());
                let hits = relevant[..top].iter().filter(|&&r| r).count();
                let dcg: f64 = (0..top).filter(|&r| relevant[r]).map(gain).sum();
                let idcg: f64 = (0..k.min(n_pos)).map(gain).sum();
                (hits as f64 / n_pos as f64, if idcg > 0.0 { dcg / idcg } else { 0.0 })
            })
            .collect(),
    )
}

/// Macro-averaged recall@K and ndcg@K.
///
/// For each user with at least one positive in `test`, every item outside
/// the user's `train` interactions is ranked by `model.score` (ties broken
/// by ascending item id). Gains are binary with a `1 / log2(rank + 1)`
/// discount.
pub fn recall_ndcg(
    model: &dyn Predictor,
    train: &ImplicitDataset,
    test: &ImplicitDataset,
    ks: &[usize],
) -> Result<RankingMetrics> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::InvalidArgument(format!("cutoffs {ks:?} must be non-empty and positive")));
    }
    if train.num_items != test.num_items || train.num_users != test.num_users {
        return Err(Error::InvalidArgument("train and test disagree on the user/item space".into()));
    }
    let train_items = train.user_items();
    let test_items = test.user_items();
    let users: Vec<u32> = (0..test.num_users as u32).filter(|&u| !test_items[u as usize].is_empty()).collect();
    let per_user = par::map(&users, |&u| {
        user_metrics(model, u, test.num_items, &train_items[u as usize], &test_items[u as usize], ks)
    });
    let mut recall = vec![0.0; ks.len()];
    let mut ndcg = vec![0.0; ks.len()];
    let (mut evaluated, mut skipped) = (0, 0);
    for m in per_user {
        match m {
            Some(vals) => {
                evaluated += 1;
                for (j, (r, n)) in vals.into_iter().enumerate() {
                    recall[j] += r;
                    ndcg[j] += n;
                }
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::debug!("{skipped} test users had no candidate items");
    }
    let denom = evaluated.max(1) as f64;
    Ok(RankingMetrics {
        recall: ks.iter().zip(&recall).map(|(&k, v)| (k, v / denom)).collect(),
        ndcg: ks.iter().zip(&ndcg).map(|(&k, v)| (k, v / denom)).collect(),
        users_evaluated: evaluated,
        users_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;
    use rand::Rng as _;

    use super::*;
    use crate::data::Interaction;
    use crate::rng;

    /// Scores from a lookup table.
    struct Table {
        items: usize,
        scores: Vec<f64>,
    }

    impl Predictor for Table {
        fn num_outputs(&self) -> usize {
            1
        }
        fn predict(&self, x: &Input) -> Vec<f64> {
            match *x {
                Input::Pair { user, item } => vec![self.scores[user as usize * self.items + item as usize]],
                _ => unreachable!(),
            }
        }
    }

    fn dataset(users: usize, items: usize, pairs: &[(u32, u32)]) -> ImplicitDataset {
        let inter: Vec<Interaction> =
            pairs.iter().map(|&(user, item)| Interaction { user, item, rating: None, timestamp: None }).collect();
        let n = inter.len();
        ImplicitDataset::new(users, items, inter, vec![1; n], BTreeSet::new(), false).unwrap()
    }

    #[test]
    fn top_scored_positive_is_perfect() {
        let train = dataset(1, 4, &[(0, 0)]);
        let test = dataset(1, 4, &[(0, 2)]);
        let model = Table { items: 4, scores: vec![9.0, 0.1, 0.8, 0.3] };
        let m = recall_ndcg(&model, &train, &test, &[1, 2]).unwrap();
        assert_eq!(m.recall[&1], 1.0);
        assert_eq!(m.ndcg[&1], 1.0);
    }

    #[test]
    fn ties_break_by_item_id() {
        let train = dataset(1, 3, &[]);
        let test = dataset(1, 3, &[(0, 1)]);
        let model = Table { items: 3, scores: vec![0.5; 3] };
        let m = recall_ndcg(&model, &train, &test, &[1, 2]).unwrap();
        assert_eq!(m.recall[&1], 0.0);
        assert_eq!(m.recall[&2], 1.0);
        assert!((m.ndcg[&2] - 1.0 / 3f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn random_scores_give_k_over_n() {
        let (users, items) = (1000, 100);
        let mut r = rng::stream(5, 1);
        let scores = (0..users * items).map(|_| r.random::<f64>()).collect();
        let pairs: Vec<(u32, u32)> = (0..users as u32).map(|u| (u, r.random_range(0..items as u32))).collect();
        let m = recall_ndcg(&Table { items, scores }, &dataset(users, items, &[]), &dataset(users, items, &pairs), &[10])
            .unwrap();
        assert!((m.recall[&10] - 0.1).abs() < 0.03, "{}", m.recall[&10]);
    }

    #[test]
    fn saturates_when_k_covers_candidates() {
        let train = dataset(2, 5, &[(0, 0), (1, 4)]);
        let test = dataset(2, 5, &[(0, 3), (1, 1), (1, 2)]);
        let model = Table { items: 5, scores: (0..10).map(|v| (v * 7 % 10) as f64).collect() };
        let m = recall_ndcg(&model, &train, &test, &[4, 10]).unwrap();
        assert_eq!(m.recall[&4], 1.0);
        assert_eq!(m.recall[&10], 1.0);
    }

    #[test]
    fn user_without_candidates_is_skipped() {
        let train = dataset(2, 2, &[(0, 0), (0, 1)]);
        let test = dataset(2, 2, &[(0, 1), (1, 0)]);
        let model = Table { items: 2, scores: vec![0.0; 4] };
        let m = recall_ndcg(&model, &train, &test, &[1]).unwrap();
        assert_eq!((m.users_evaluated, m.users_skipped), (1, 1));
    }

    proptest! {
        #[test]
        fn recall_monotone_and_bounded(seed in 0u64..500) {
            let mut r = rng::stream(seed, 2);
            let (users, items) = (6, 12);
            let scores = (0..users * items).map(|_| r.random_range(0..4) as f64).collect();
            let mut pairs = BTreeSet::new();
            for _ in 0..20 {
                pairs.insert((r.random_range(0..users as u32), r.random_range(0..items as u32)));
            }
            let pairs: Vec<_> = pairs.into_iter().collect();
            let (tr, te): (Vec<_>, Vec<_>) = pairs.iter().partition(|p| (p.0 + p.1) % 3 == 0);
            let ks = [1, 2, 3, 5, 8, 12];
            let m = recall_ndcg(&Table { items, scores }, &dataset(users, items, &tr), &dataset(users, items, &te), &ks).unwrap();
            for w in ks.windows(2) {
                prop_assert!(m.recall[&w[0]] <= m.recall[&w[1]] + 1e-15);
            }
            for k in ks {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&m.ndcg[&k]));
            }
        }

        #[test]
        fn perfect_ranking_has_unit_ndcg(seed in 0u64..200) {
            let mut r = rng::stream(seed, 3);
            let items = 15;
            let pos: BTreeSet<u32> = (0..r.random_range(1..6)).map(|_| r.random_range(0..items as u32)).collect();
            let scores = (0..items as u32).map(|i| if pos.contains(&i) { 1.0 } else { 0.0 }).collect();
            let pairs: Vec<(u32, u32)> = pos.iter().map(|&i| (0, i)).collect();
            let m = recall_ndcg(&Table { items, scores }, &dataset(1, items, &[]), &dataset(1, items, &pairs), &[pos.len(), pos.len() + 3, items]).unwrap();
            for v in m.ndcg.values() {
                prop_assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }
}
