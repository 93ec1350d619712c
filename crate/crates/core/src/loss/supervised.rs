//! Plain supervised losses used by the baselines and by prior pre-training.
//!
//! Both losses are weighted means: `sum_i w_i * l_i / sum_i w_i`, with unit
//! weights when none are given. Examples of weight 0 contribute nothing.

use super::objective::backprop;
use super::{check_len, clamp, ClassExample, LossBundle, Labeled, Role};
use crate::error::{Error, Result};
use crate::model::{Input, Model};
use crate::par;

/// Per-example binary cross-entropy against the observed label.
pub fn bce_per_example(model: &Model, batch: &[Labeled], eps: f64) -> Vec<f64> {
    par::map(batch, |ex| {
        let (p, _) = clamp(model.prob(&ex.input), eps);
        if ex.label == 1 {
            -p.ln()
        } else {
            -(1.0 - p).ln()
        }
    })
}

fn weight_total(weights: Option<&[f64]>, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    match weights {
        None => Ok(n as f64),
        Some(w) => {
            check_len(n, w.len())?;
            if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
            }
            let total: f64 = w.iter().sum();
            if total == 0.0 {
                return Err(Error::InvalidArgument("all example weights are zero".into()));
            }
            Ok(total)
        }
    }
}

/// Weighted mean binary cross-entropy with parameter gradients.
pub fn bce_loss(model: &Model, batch: &[Labeled], weights: Option<&[f64]>, eps: f64) -> Result<LossBundle> {
    let total = weight_total(weights, batch.len())?;
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let terms: Vec<(f64, f64)> = par::map_indexed(batch.len(), |i| {
        let ex = &batch[i];
        let (p, mask) = clamp(model.prob(&ex.input), eps);
        let (loss, dp) = if ex.label == 1 { (-p.ln(), -mask / p) } else { (-(1.0 - p).ln(), mask / (1.0 - p)) };
        (w(i) * loss, w(i) * dp / total)
    });
    let value = terms.iter().map(|t| t.0).sum::<f64>() / total;
    let upstream: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let inputs: Vec<Input> = batch.iter().map(|b| b.input).collect();
    Ok(LossBundle::new(value).with_grad(Role::Target, backprop(model, &inputs, &upstream)))
}

/// Per-example categorical cross-entropy against the observed label.
pub fn cross_entropy_per_example(model: &Model, batch: &[ClassExample], eps: f64) -> Vec<f64> {
    par::map(batch, |ex| {
        let out = model.forward(&Input::Dense(ex.features));
        -clamp(out[ex.label], eps).0.ln()
    })
}

/// Weighted mean categorical cross-entropy with parameter gradients.
pub fn cross_entropy_loss(
    model: &Model,
    batch: &[ClassExample],
    weights: Option<&[f64]>,
    eps: f64,
) -> Result<LossBundle> {
    let total = weight_total(weights, batch.len())?;
    let classes = model.num_outputs();
    if let Some(bad) = batch.iter().find(|ex| ex.label >= classes) {
        return Err(Error::InvalidArgument(format!("label {} outside 0..{classes}", bad.label)));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let terms: Vec<(f64, Vec<f64>)> = par::map_indexed(batch.len(), |i| {
        let ex = &batch[i];
        let out = model.forward(&Input::Dense(ex.features));
        let (p, mask) = clamp(out[ex.label], eps);
        let mut up = vec![0.0; classes];
        up[ex.label] = -w(i) * mask / p / total;
        (-w(i) * p.ln(), up)
    });
    let value = terms.iter().map(|t| t.0).sum::<f64>() / total;
    let upstream: Vec<f64> = terms.into_iter().flat_map(|t| t.1).collect();
    let inputs: Vec<Input> = batch.iter().map(|b| Input::Dense(b.features)).collect();
    Ok(LossBundle::new(value).with_grad(Role::Target, backprop(model, &inputs, &upstream)))
}
