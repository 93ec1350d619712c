use std::path::Path;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::{self, tag};

/// Dense features with noisy and true class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiClassDataset {
    pub num_classes: usize,
    pub dim: usize,
    /// Row-major `len() x dim`.
    pub features: Vec<f64>,
    pub noisy_labels: Vec<usize>,
    pub true_labels: Vec<usize>,
    pub noise_ratio: f64,
}

impl MultiClassDataset {
    pub fn new(
        num_classes: usize,
        dim: usize,
        features: Vec<f64>,
        noisy_labels: Vec<usize>,
        true_labels: Vec<usize>,
        noise_ratio: f64,
    ) -> Result<Self> {
        ensure(num_classes >= 2, || "need at least two classes".into())?;
        let n = noisy_labels.len();
        if true_labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: true_labels.len() });
        }
        if features.len() != n * dim {
            return Err(Error::DimensionMismatch { expected: n * dim, actual: features.len() });
        }
        if noisy_labels.iter().chain(&true_labels).any(|&l| l >= num_classes) {
            return Err(Error::Data(format!("label outside 0..{num_classes}")));
        }
        Ok(Self { num_classes, dim, features, noisy_labels, true_labels, noise_ratio })
    }

    pub fn len(&self) -> usize {
        self.noisy_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noisy_labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_noisy(&self, i: usize) -> bool {
        self.noisy_labels[i] != self.true_labels[i]
    }

    pub fn measured_noise(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (0..self.len()).filter(|&i| self.is_noisy(i)).count() as f64 / self.len() as f64
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut features = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            features.extend_from_slice(self.row(i));
        }
        Self {
            num_classes: self.num_classes,
            dim: self.dim,
            features,
            noisy_labels: idx.iter().map(|&i| self.noisy_labels[i]).collect(),
            true_labels: idx.iter().map(|&i| self.true_labels[i]).collect(),
            noise_ratio: self.noise_ratio,
        }
    }

    /// Random train/valid/test partition of the rows.
    pub fn split_random(&self, ratios: [f64; 3], seed: u64) -> Result<MultiClassSplit> {
        let sum: f64 = ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || ratios.iter().any(|&r| r < 0.0) {
            return Err(Error::Config(format!("split ratios {ratios:?} must be non-negative and sum to 1")));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut rng::stream(seed, tag::SPLIT));
        let n = idx.len();
        let n_train = ((ratios[0] * n as f64).round() as usize).min(n);
        let n_valid = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
        let mut parts = [
            idx[..n_train].to_vec(),
            idx[n_train..n_train + n_valid].to_vec(),
            idx[n_train + n_valid..].to_vec(),
        ];
        for p in &mut parts {
            p.sort_unstable();
        }
        Ok(MultiClassSplit {
            train: self.subset(&parts[0]),
            valid: self.subset(&parts[1]),
            test: self.subset(&parts[2]),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "meta": {
                "kind": "multiclass",
                "num_classes": self.num_classes,
                "dim": self.dim,
                "noise_ratio": self.noise_ratio,
            },
            "features": self.features.chunks(self.dim.max(1)).collect::<Vec<_>>(),
            "noisy_labels": self.noisy_labels,
            "true_labels": self.true_labels,
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Meta {
            kind: String,
            num_classes: usize,
            dim: usize,
            noise_ratio: f64,
        }
        #[derive(Deserialize)]
        struct Doc {
            meta: Meta,
            features: Vec<Vec<f64>>,
            noisy_labels: Vec<usize>,
            true_labels: Vec<usize>,
        }
        let doc: Doc = serde_json::from_value(value.clone())?;
        if doc.meta.kind != "multiclass" {
            return Err(Error::Data(format!("expected multiclass dataset, got {}", doc.meta.kind)));
        }
        if doc.features.iter().any(|r| r.len() != doc.meta.dim) {
            return Err(Error::Data("feature row length differs from meta.dim".into()));
        }
        Self::new(
            doc.meta.num_classes,
            doc.meta.dim,
            doc.features.concat(),
            doc.noisy_labels,
            doc.true_labels,
            doc.meta.noise_ratio,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_json())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct MultiClassSplit {
    pub train: MultiClassDataset,
    pub valid: MultiClassDataset,
    pub test: MultiClassDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub num_classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub spread: f64,
    pub noise_ratio: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn generate(&self) -> Result<MultiClassDataset> {
        gen_multiclass_blobs(self.num_classes, self.per_class, self.dim, self.spread, self.noise_ratio, self.seed)
    }
}

/// Gaussian class clusters with exact symmetric label noise.
///
/// Class centres are drawn from `N(0, spread^2 I)`, points from
/// `N(centre, I)`. Exactly `round(noise_ratio * N)` rows get a label drawn
/// uniformly from the other classes.
pub fn gen_multiclass_blobs(
    num_classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    noise_ratio: f64,
    seed: u64,
) -> Result<MultiClassDataset> {
    ensure(num_classes >= 2, || format!("num_classes = {num_classes} must be at least 2"))?;
    ensure(per_class >= 1 && dim >= 1, || "per_class and dim must be at least 1".into())?;
    ensure((0.0..1.0).contains(&noise_ratio), || format!("noise_ratio = {noise_ratio} must lie in [0, 1)"))?;
    ensure(spread.is_finite() && spread >= 0.0, || "spread must be finite and non-negative".into())?;

    let mut rng = rng::stream(seed, tag::BLOBS);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let centres: Vec<f64> = (0..num_classes * dim).map(|_| spread * normal()).collect();
    let n = num_classes * per_class;
    let mut features = Vec::with_capacity(n * dim);
    let mut true_labels = Vec::with_capacity(n);
    for c in 0..num_classes {
        for _ in 0..per_class {
            for d in 0..dim {
                features.push(centres[c * dim + d] + normal());
            }
            true_labels.push(c);
        }
    }

    let mut corrupt = rng::stream(seed, tag::CORRUPT);
    let flips = ((noise_ratio * n as f64).round() as usize).min(n);
    let mut noisy_labels = true_labels.clone();
    let mut chosen = sample(&mut corrupt, n, flips).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        let offset = corrupt.random_range(1..num_classes);
        noisy_labels[i] = (true_labels[i] + offset) % num_classes;
    }
    MultiClassDataset::new(num_classes, dim, features, noisy_labels, true_labels, noise_ratio)
}
