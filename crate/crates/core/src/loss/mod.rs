//! Likelihood expectations, KL terms and composite denoising objectives.
//!
//! Probability-level operations (`likelihood_expectation_binary`,
//! `dp_expectation`, the multi-class phases, ...) take model outputs and
//! return a [`LossBundle`] whose gradients are sensitivities with respect to
//! those outputs. Model-level objectives (`deca_loss`, `deca_p_loss`,
//! `deca_p_multiclass_loss`, the supervised losses) back-propagate into
//! parameter gradients aligned with each model's parameter vector.
//!
//! Expectation operations return sums over the batch; composite objectives
//! average every term by the batch size.

mod binary;
mod config;
mod interpret;
mod kl;
mod multiclass;
mod objective;
mod supervised;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use binary::{dn_expectation, dp_expectation, likelihood_expectation_binary};
pub use config::DecaConfig;
pub use interpret::{posterior_positive, real_positive_probability, PosteriorMode};
pub use kl::{kl_bernoulli, kl_bernoulli_grad, kl_categorical, kl_categorical_grad};
pub use multiclass::{multiclass_expectation_phase1, multiclass_expectation_phase2};
pub use objective::{
    deca_loss, deca_p_loss, deca_p_multiclass_loss, BinaryPhase, ClassExample, Labeled, MultiPhase,
};
pub use supervised::{bce_loss, bce_per_example, cross_entropy_loss, cross_entropy_per_example};

/// Default probability clamp applied before any logarithm.
pub const DEFAULT_EPS: f64 = 1e-7;

/// Examples per gradient-accumulation chunk.
pub(crate) const GRAD_CHUNK: usize = 64;

/// Which model a gradient belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// f: the target model.
    Target,
    /// g: the co-trained auxiliary model.
    Auxiliary,
    /// f': the frozen pre-trained prior.
    Prior,
    /// h: P(observed 1 | true 0).
    ChannelNeg,
    /// h': P(observed 1 | true 1).
    ChannelPos,
    /// Multi-class channel P(observed | true).
    Channel,
}

/// A scalar loss and its gradients, keyed by model role.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossBundle {
    pub value: f64,
    pub grads: BTreeMap<Role, Vec<f64>>,
}

impl LossBundle {
    pub fn new(value: f64) -> Self {
        Self { value, grads: BTreeMap::new() }
    }

    pub fn with_grad(mut self, role: Role, grad: Vec<f64>) -> Self {
        self.grads.insert(role, grad);
        self
    }

    pub fn grad(&self, role: Role) -> Option<&[f64]> {
        self.grads.get(&role).map(Vec::as_slice)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grads.values().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

/// Clamps `p` into `[eps, 1 - eps]`; the second value is the derivative of
/// the clamp (1 inside, 0 where it saturates).
#[inline]
pub(crate) fn clamp(p: f64, eps: f64) -> (f64, f64) {
    if p < eps {
        (eps, 0.0)
    } else if p > 1.0 - eps {
        (1.0 - eps, 0.0)
    } else {
        (p, 1.0)
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> crate::Result<()> {
    if expected != actual {
        Err(crate::Error::DimensionMismatch { expected, actual })
    } else {
        Ok(())
    }
}
