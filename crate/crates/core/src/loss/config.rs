use serde::{Deserialize, Serialize};

use super::DEFAULT_EPS;
use crate::error::{Error, Result};

/// Training hyperparameters shared by every trainer.
///
/// Binary routines use `c1` in the denoising-positive step and `c2` in the
/// denoising-negative step. Multi-class routines use `c1` for
/// `-log P(obs = k | true != k)` and `c2` for
/// `-log P(obs != k, obs != true | true != k)` at focus class `k`.
/// `per_class` overrides both per focus class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecaConfig {
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub per_class: Option<Vec<[f64; 2]>>,
    pub learn_rate: f64,
    /// Total epochs T.
    pub epochs: usize,
    /// Epochs of the substituted-constant phase (T_1) in the multi-class
    /// routine; the stop-gradient phase runs afterwards. `None` disables it.
    pub phase1_epochs: Option<usize>,
    pub reg_weight: f64,
    pub batch_size: usize,
    /// Seed of the target model (and of the prior in pre-trained variants).
    pub seed: u64,
    /// Seed of the re-initialised target in pre-trained variants; must differ
    /// from `seed`.
    pub seed_aux: u64,
    pub prob_clamp: f64,
    /// Early-stopping patience in evaluations.
    pub patience: usize,
}

impl Default for DecaConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            c1: 10.0,
            c2: 10.0,
            per_class: None,
            learn_rate: 1e-3,
            epochs: 100,
            phase1_epochs: None,
            reg_weight: 0.0,
            batch_size: 2048,
            seed: 1,
            seed_aux: 2,
            prob_clamp: DEFAULT_EPS,
            patience: 10,
        }
    }
}

impl DecaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha = {} must lie in [0, 1]", self.alpha));
        }
        let consts = [self.c1, self.c2]
            .into_iter()
            .chain(self.per_class.iter().flatten().flatten().copied());
        for c in consts {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("C constants must be positive and finite, got {c}"));
            }
        }
        if !(self.learn_rate > 0.0 && self.learn_rate.is_finite()) {
            return bad(format!("learn_rate = {} must be positive", self.learn_rate));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if let Some(t1) = self.phase1_epochs {
            if t1 > self.epochs {
                return bad(format!("phase1_epochs = {t1} exceeds epochs = {}", self.epochs));
            }
        }
        if !(self.reg_weight >= 0.0 && self.reg_weight.is_finite()) {
            return bad("reg_weight must be non-negative".into());
        }
        if self.seed == self.seed_aux {
            return bad(format!("seed and seed_aux must differ (both {})", self.seed));
        }
        if !(self.prob_clamp > 0.0 && self.prob_clamp < 0.5) {
            return bad(format!("prob_clamp = {} must lie in (0, 0.5)", self.prob_clamp));
        }
        Ok(())
    }

    /// (C_k1, C_k2) for focus class `k`.
    pub fn class_constants(&self, k: usize) -> (f64, f64) {
        match &self.per_class {
            Some(pc) if k < pc.len() => (pc[k][0], pc[k][1]),
            _ => (self.c1, self.c2),
        }
    }

    /// Constant of the denoising-positive step (focus class 0).
    pub fn dp_constant(&self) -> f64 {
        match &self.per_class {
            Some(pc) if !pc.is_empty() => pc[0][0],
            _ => self.c1,
        }
    }

    /// Constant of the denoising-negative step (focus class 1).
    pub fn dn_constant(&self) -> f64 {
        match &self.per_class {
            Some(pc) if pc.len() > 1 => pc[1][0],
            _ => self.c2,
        }
    }

    pub fn phase2_active(&self, epoch: usize) -> bool {
        self.phase1_epochs.is_some_and(|t1| epoch >= t1)
    }
}
