use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::{self, tag};

/// One observed user-item interaction. The observed label is always 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: u32,
    pub item: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
}

/// Binary implicit feedback: the stored interactions are the observed
/// positives, every other pair is an observed negative.
///
/// The hidden truth is kept in two parts: `true_labels` is aligned with
/// `interactions`, and `unobserved_positives` lists the true positives that
/// were never observed. When `truth_complete` is false (real data) the truth
/// of unobserved pairs is unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitDataset {
    pub num_users: usize,
    pub num_items: usize,
    pub interactions: Vec<Interaction>,
    pub true_labels: Vec<u8>,
    pub unobserved_positives: BTreeSet<(u32, u32)>,
    pub truth_complete: bool,
    pub item_popularity: Vec<u32>,
}

impl ImplicitDataset {
    pub fn new(
        num_users: usize,
        num_items: usize,
        interactions: Vec<Interaction>,
        true_labels: Vec<u8>,
        unobserved_positives: BTreeSet<(u32, u32)>,
        truth_complete: bool,
    ) -> Result<Self> {
        if true_labels.len() != interactions.len() {
            return Err(Error::DimensionMismatch {
                expected: interactions.len(),
                actual: true_labels.len(),
            });
        }
        for it in &interactions {
            if it.user as usize >= num_users || it.item as usize >= num_items {
                return Err(Error::Data(format!(
                    "interaction ({}, {}) outside {}x{}",
                    it.user, it.item, num_users, num_items
                )));
            }
        }
        let mut item_popularity = vec![0u32; num_items];
        for it in &interactions {
            item_popularity[it.item as usize] += 1;
        }
        Ok(Self {
            num_users,
            num_items,
            interactions,
            true_labels,
            unobserved_positives,
            truth_complete,
            item_popularity,
        })
    }

    /// Same shape and truth bookkeeping, restricted to `keep` (indices into
    /// `interactions`).
    pub(crate) fn subset(&self, keep: &[usize]) -> Self {
        let interactions = keep.iter().map(|&i| self.interactions[i]).collect();
        let true_labels = keep.iter().map(|&i| self.true_labels[i]).collect();
        Self::new(
            self.num_users,
            self.num_items,
            interactions,
            true_labels,
            self.unobserved_positives.clone(),
            self.truth_complete,
        )
        .expect("subset of a valid dataset is valid")
    }

    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    /// Sorted item lists per user.
    pub fn user_items(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.num_users];
        for it in &self.interactions {
            out[it.user as usize].push(it.item);
        }
        for items in &mut out {
            items.sort_unstable();
            items.dedup();
        }
        out
    }

    /// Hidden truth of an arbitrary pair, if known.
    pub fn hidden_truth(&self, user: u32, item: u32) -> Option<u8> {
        if let Some(pos) = self
            .interactions
            .iter()
            .position(|it| it.user == user && it.item == item)
        {
            return Some(self.true_labels[pos]);
        }
        if self.unobserved_positives.contains(&(user, item)) {
            Some(1)
        } else if self.truth_complete {
            Some(0)
        } else {
            None
        }
    }

    /// Interactions whose hidden truth is 0 (corrupted positives).
    pub fn noisy_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.true_labels[i] == 0).collect()
    }

    /// The JSON document {meta, interactions, noisy_labels, true_labels,
    /// unobserved_positives}.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "meta": {
                "kind": "implicit",
                "num_users": self.num_users,
                "num_items": self.num_items,
                "truth_complete": self.truth_complete,
            },
            "interactions": self.interactions,
            "noisy_labels": vec![1u8; self.interactions.len()],
            "true_labels": self.true_labels,
            "unobserved_positives": self.unobserved_positives,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Meta {
            kind: String,
            num_users: usize,
            num_items: usize,
            truth_complete: bool,
        }
        #[derive(Deserialize)]
        struct Doc {
            meta: Meta,
            interactions: Vec<Interaction>,
            noisy_labels: Vec<u8>,
            true_labels: Vec<u8>,
            #[serde(default)]
            unobserved_positives: BTreeSet<(u32, u32)>,
        }
        let doc: Doc = serde_json::from_value(value.clone())?;
        if doc.meta.kind != "implicit" {
            return Err(Error::Data(format!("expected implicit dataset, got {}", doc.meta.kind)));
        }
        if doc.noisy_labels.iter().any(|&l| l != 1) {
            return Err(Error::Data("stored interactions must have observed label 1".into()));
        }
        Self::new(
            doc.meta.num_users,
            doc.meta.num_items,
            doc.interactions,
            doc.true_labels,
            doc.unobserved_positives,
            doc.meta.truth_complete,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_json())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Arguments of the planted low-rank generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedSpec {
    pub num_users: usize,
    pub num_items: usize,
    pub latent_dim: usize,
    pub noise_pos: f64,
    #[serde(default)]
    pub noise_neg: f64,
    pub seed: u64,
    /// Slope of the logistic link applied to the unit-variance score.
    #[serde(default = "default_sharpness")]
    pub sharpness: f64,
    /// Intercept of the logistic link; controls the true-positive density.
    #[serde(default = "default_offset")]
    pub offset: f64,
}

fn default_sharpness() -> f64 {
    6.0
}

fn default_offset() -> f64 {
    -5.0
}

impl PlantedSpec {
    pub fn new(num_users: usize, num_items: usize, latent_dim: usize, noise_pos: f64, noise_neg: f64, seed: u64) -> Self {
        Self {
            num_users,
            num_items,
            latent_dim,
            noise_pos,
            noise_neg,
            seed,
            sharpness: default_sharpness(),
            offset: default_offset(),
        }
    }

    pub fn generate(&self) -> Result<ImplicitDataset> {
        gen_planted_implicit_with(self)
    }
}

/// Planted low-rank logistic implicit feedback with exact positive and
/// negative corruption. See [`PlantedSpec`] for the link parameters.
pub fn gen_planted_implicit(
    num_users: usize,
    num_items: usize,
    latent_dim: usize,
    noise_pos: f64,
    noise_neg: f64,
    seed: u64,
) -> Result<ImplicitDataset> {
    PlantedSpec::new(num_users, num_items, latent_dim, noise_pos, noise_neg, seed).generate()
}

fn gen_planted_implicit_with(spec: &PlantedSpec) -> Result<ImplicitDataset> {
    ensure(spec.num_users >= 1 && spec.num_items >= 1 && spec.latent_dim >= 1, || {
        "dimensions must be at least 1".into()
    })?;
    for (name, v) in [("noise_pos", spec.noise_pos), ("noise_neg", spec.noise_neg)] {
        ensure((0.0..0.5).contains(&v), || {
            format!("{name} = {v} must lie in [0, 0.5); labels become uninformative otherwise")
        })?;
    }
    let (nu, ni, d) = (spec.num_users, spec.num_items, spec.latent_dim);

    let mut latent_rng = rng::stream(spec.seed, tag::LATENT);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(&mut latent_rng)).collect()
    };
    let users = draw(nu * d);
    let items = draw(ni * d);
    let norm = (d as f64).sqrt();
    let score = |u: usize, i: usize| -> f64 {
        let (a, b) = (&users[u * d..(u + 1) * d], &items[i * d..(i + 1) * d]);
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / norm
    };

    let mut truth_rng = rng::stream(spec.seed, tag::TRUTH);
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    let mut scores = BTreeMap::new();
    for u in 0..nu {
        for i in 0..ni {
            let s = score(u, i);
            scores.insert((u as u32, i as u32), s);
            let p = 1.0 / (1.0 + (-(spec.sharpness * s + spec.offset)).exp());
            if truth_rng.random::<f64>() < p {
                positives.push((u as u32, i as u32));
            } else {
                negatives.push((u as u32, i as u32));
            }
        }
    }

    let mut corrupt_rng = rng::stream(spec.seed, tag::CORRUPT);
    // Withhold a fraction of true positives: they show up as observed negatives.
    let withheld = (spec.noise_neg * positives.len() as f64).round() as usize;
    let withheld_idx: BTreeSet<usize> = sample(&mut corrupt_rng, positives.len(), withheld)
        .into_iter()
        .collect();
    let kept: Vec<(u32, u32)> = positives
        .iter()
        .enumerate()
        .filter(|(i, _)| !withheld_idx.contains(i))
        .map(|(_, p)| *p)
        .collect();

    // Replace a fraction of the observed positives with true negatives.
    let noisy = ((spec.noise_pos * kept.len() as f64).round() as usize).min(negatives.len());
    let replaced: BTreeSet<usize> = sample(&mut corrupt_rng, kept.len(), noisy).into_iter().collect();
    let fake: Vec<(u32, u32)> = sample(&mut corrupt_rng, negatives.len(), noisy)
        .into_iter()
        .map(|i| negatives[i])
        .collect();

    let mut observed: Vec<((u32, u32), u8)> = kept
        .iter()
        .enumerate()
        .filter(|(i, _)| !replaced.contains(i))
        .map(|(_, p)| (*p, 1u8))
        .chain(fake.into_iter().map(|p| (p, 0u8)))
        .collect();
    observed.sort_unstable();

    let observed_set: BTreeSet<(u32, u32)> = observed.iter().map(|(p, _)| *p).collect();
    let unobserved_positives: BTreeSet<(u32, u32)> = positives
        .iter()
        .filter(|p| !observed_set.contains(p))
        .copied()
        .collect();

    // Ratings: quintile buckets of the true score among observed pairs.
    let mut by_score: Vec<usize> = (0..observed.len()).collect();
    by_score.sort_by(|&a, &b| {
        scores[&observed[a].0]
            .total_cmp(&scores[&observed[b].0])
            .then(a.cmp(&b))
    });
    let mut ratings = vec![0u8; observed.len()];
    let n = observed.len().max(1);
    for (rank, &idx) in by_score.iter().enumerate() {
        ratings[idx] = 1 + ((rank * 5) / n) as u8;
    }

    let interactions = observed
        .iter()
        .zip(&ratings)
        .map(|(((u, i), _), &r)| Interaction {
            user: *u,
            item: *i,
            rating: Some(r),
            timestamp: None,
        })
        .collect();
    let true_labels = observed.iter().map(|(_, l)| *l).collect();
    ImplicitDataset::new(nu, ni, interactions, true_labels, unobserved_positives, true)
}
