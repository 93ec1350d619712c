use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::ImplicitDataset;
use crate::error::{Error, Result};
use crate::loss::{real_positive_probability, PosteriorMode};
use crate::model::Predictor;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucketStat {
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingStudy {
    pub buckets: BTreeMap<u8, BucketStat>,
    /// Ratings in 1..=5 with no interaction.
    pub empty_buckets: Vec<u8>,
    /// Rank correlation between rating and bucket mean; `None` with fewer
    /// than two buckets.
    pub spearman: Option<f64>,
}

/// Mean real-positive probability of the rated interactions of `data`,
/// grouped by rating.
pub fn rating_bucket_probability(
    f: &dyn Predictor,
    h: &dyn Predictor,
    h_prime: &dyn Predictor,
    data: &ImplicitDataset,
    mode: PosteriorMode,
) -> Result<RatingStudy> {
    let rated: Vec<(u32, u32, u8)> =
        data.interactions.iter().filter_map(|it| it.rating.map(|r| (it.user, it.item, r))).collect();
    if rated.is_empty() {
        return Err(Error::Data("no rated interactions".into()));
    }
    let probs: Vec<Result<f64>> =
        par::map(&rated, |&(u, i, _)| real_positive_probability(f, h, h_prime, (u, i), true, mode));
    let mut sums: BTreeMap<u8, (f64, usize)> = BTreeMap::new();
    for ((_, _, r), p) in rated.iter().zip(probs) {
        let e = sums.entry(*r).or_default();
        e.0 += p?;
        e.1 += 1;
    }
    let buckets: BTreeMap<u8, BucketStat> =
        sums.into_iter().map(|(r, (s, n))| (r, BucketStat { mean: s / n as f64, count: n })).collect();
    let empty_buckets: Vec<u8> = (1..=5).filter(|r| !buckets.contains_key(r)).collect();
    if !empty_buckets.is_empty() {
        log::warn!("rating buckets {empty_buckets:?} are empty");
    }
    let xs: Vec<f64> = buckets.keys().map(|&r| r as f64).collect();
    let ys: Vec<f64> = buckets.values().map(|b| b.mean).collect();
    Ok(RatingStudy { spearman: spearman(&xs, &ys), buckets, empty_buckets })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant or shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx * vy).sqrt())
    }
}
