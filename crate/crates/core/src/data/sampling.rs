use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ImplicitDataset;
use crate::error::{Error, Result};
use crate::rng::{self, tag, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeStrategy {
    #[default]
    Uniform,
    /// Popularity-weighted over the user's missing items.
    Wbpr,
}

/// Reusable negative sampler over a fixed interaction set.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    num_items: usize,
    user_items: Vec<Vec<u32>>,
    popularity: Vec<u32>,
    strategy: NegativeStrategy,
}

impl NegativeSampler {
    pub fn new(dataset: &ImplicitDataset, strategy: NegativeStrategy) -> Self {
        Self {
            num_items: dataset.num_items,
            user_items: dataset.user_items(),
            popularity: dataset.item_popularity.clone(),
            strategy,
        }
    }

    fn interacted(&self, user: u32, item: u32) -> bool {
        self.user_items[user as usize].binary_search(&item).is_ok()
    }

    fn check_user(&self, user: u32) -> Result<()> {
        let u = user as usize;
        if u >= self.user_items.len() {
            return Err(Error::Sampling(format!("unknown user {user}")));
        }
        if self.user_items[u].len() >= self.num_items {
            return Err(Error::Sampling(format!("user {user} has no missing items")));
        }
        Ok(())
    }

    fn missing(&self, user: u32) -> Vec<u32> {
        (0..self.num_items as u32).filter(|&i| !self.interacted(user, i)).collect()
    }

    /// One negative per positive, in order.
    pub fn sample(&self, positives: &[(u32, u32)], rng: &mut Rng) -> Result<Vec<(u32, u32)>> {
        let mut out = Vec::with_capacity(positives.len());
        match self.strategy {
            NegativeStrategy::Uniform => {
                for &(user, _) in positives {
                    self.check_user(user)?;
                    let free = self.num_items - self.user_items[user as usize].len();
                    // Rejection sampling is cheap unless the user is nearly saturated.
                    let item = if free * 4 >= self.num_items {
                        loop {
                            let cand = rng.random_range(0..self.num_items as u32);
                            if !self.interacted(user, cand) {
                                break cand;
                            }
                        }
                    } else {
                        let missing = self.missing(user);
                        missing[rng.random_range(0..missing.len())]
                    };
                    out.push((user, item));
                }
            }
            NegativeStrategy::Wbpr => {
                let mut cache: std::collections::BTreeMap<u32, (Vec<u32>, Option<WeightedIndex<f64>>)> =
                    Default::default();
                for &(user, _) in positives {
                    self.check_user(user)?;
                    let (missing, dist) = cache.entry(user).or_insert_with(|| {
                        let missing = self.missing(user);
                        let weights: Vec<f64> = missing.iter().map(|&i| self.popularity[i as usize] as f64).collect();
                        // All-zero popularity falls back to uniform.
                        let dist = WeightedIndex::new(&weights).ok();
                        (missing, dist)
                    });
                    let idx = match dist {
                        Some(d) => d.sample(rng),
                        None => rng.random_range(0..missing.len()),
                    };
                    out.push((user, missing[idx]));
                }
            }
        }
        Ok(out)
    }
}

/// One negative per positive pair, never colliding with an interaction.
pub fn sample_negatives(
    dataset: &ImplicitDataset,
    positives: &[(u32, u32)],
    strategy: NegativeStrategy,
    seed: u64,
) -> Result<Vec<(u32, u32)>> {
    let sampler = NegativeSampler::new(dataset, strategy);
    let mut rng = rng::stream(seed, tag::NEGATIVES);
    sampler.sample(positives, &mut rng)
}
