//! Bernoulli and categorical KL divergences on clamped probabilities.

use super::{check_len, clamp, DEFAULT_EPS};
use crate::error::Result;

/// KL(Bern(p) || Bern(q)) with both arguments clamped to `[eps, 1 - eps]`.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    kl_bernoulli_grad(p, q, DEFAULT_EPS).0
}

/// Value and partial derivatives (d/dp, d/dq) of the clamped Bernoulli KL.
pub fn kl_bernoulli_grad(p: f64, q: f64, eps: f64) -> (f64, f64, f64) {
    let (p, dpc) = clamp(p, eps);
    let (q, dqc) = clamp(q, eps);
    let value = p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    let dp = (p / q).ln() - ((1.0 - p) / (1.0 - q)).ln();
    let dq = -p / q + (1.0 - p) / (1.0 - q);
    (value.max(0.0), dp * dpc, dq * dqc)
}

/// Clamps every entry to `[eps, 1 - eps]` and renormalises.
/// Returns the normalised vector, the clamp mask, and the pre-normalisation sum.
fn clamp_simplex(p: &[f64], eps: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let (clamped, mask): (Vec<f64>, Vec<f64>) = p.iter().map(|&v| clamp(v, eps)).unzip();
    let sum: f64 = clamped.iter().sum();
    (clamped.iter().map(|v| v / sum).collect(), mask, sum)
}

/// Pulls a gradient w.r.t. the normalised vector back through
/// normalisation and clamping.
fn pull_back(g: &[f64], normalised: &[f64], mask: &[f64], sum: f64) -> Vec<f64> {
    let dot: f64 = g.iter().zip(normalised).map(|(a, b)| a * b).sum();
    g.iter()
        .zip(mask)
        .map(|(gi, m)| m * (gi - dot) / sum)
        .collect()
}

/// KL(p || q) over a shared support after clamping and renormalising both.
pub fn kl_categorical(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(kl_categorical_grad(p, q, DEFAULT_EPS)?.0)
}

/// Value and gradients with respect to the raw `p` and `q` vectors.
pub fn kl_categorical_grad(p: &[f64], q: &[f64], eps: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_len(p.len(), q.len())?;
    let (pn, pm, ps) = clamp_simplex(p, eps);
    let (qn, qm, qs) = clamp_simplex(q, eps);
    let value: f64 = pn.iter().zip(&qn).map(|(a, b)| a * (a / b).ln()).sum();
    let gp: Vec<f64> = pn.iter().zip(&qn).map(|(a, b)| (a / b).ln() + 1.0).collect();
    let gq: Vec<f64> = pn.iter().zip(&qn).map(|(a, b)| -a / b).collect();
    Ok((value.max(0.0), pull_back(&gp, &pn, &pm, ps), pull_back(&gq, &qn, &qm, qs)))
}
