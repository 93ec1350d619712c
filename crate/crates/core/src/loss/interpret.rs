//! Probability that an observed interaction is a real positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Input, Predictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosteriorMode {
    /// Bayes' rule through the channel: h'f / (h'f + h(1 - f)).
    Deca,
    /// The target prediction itself.
    #[default]
    DecaP,
}

/// P(true 1 | observed 1) from the target `f`, h = P(obs 1 | true 0) and
/// h' = P(obs 1 | true 1).
pub fn posterior_positive(f: f64, h: f64, h_prime: f64, mode: PosteriorMode) -> f64 {
    match mode {
        PosteriorMode::DecaP => f,
        PosteriorMode::Deca => {
            let num = h_prime * f;
            let den = num + h * (1.0 - f);
            if den > 0.0 {
                num / den
            } else {
                f
            }
        }
    }
}

/// Real-positive probability of an interacted pair. `interacted` tells
/// whether the pair carries an observed positive label.
pub fn real_positive_probability(
    f: &dyn Predictor,
    h: &dyn Predictor,
    h_prime: &dyn Predictor,
    pair: (u32, u32),
    interacted: bool,
    mode: PosteriorMode,
) -> Result<f64> {
    if !interacted {
        return Err(Error::Contract(format!("pair ({}, {}) has no observed interaction", pair.0, pair.1)));
    }
    let x = Input::Pair { user: pair.0, item: pair.1 };
    Ok(posterior_positive(f.prob(&x), h.prob(&x), h_prime.prob(&x), mode))
}
