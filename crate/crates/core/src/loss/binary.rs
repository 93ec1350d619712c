//! Binary likelihood expectations E_{y ~ f}[log P(observed | y)].
//!
//! h is P(observed 1 | true 0), h' is P(observed 1 | true 1). The full
//! expansion per example is
//!
//! ```text
//! observed 1:  log h' * f      + log h * (1 - f)
//! observed 0:  log(1 - h') * f + log(1 - h) * (1 - f)
//! ```
//!
//! The denoising-positive step pins h' = 1 and replaces -log(1 - h') with
//! `C`; the denoising-negative step pins h = 0 and replaces -log h with `C`.

use super::{check_len, clamp, LossBundle, Role};
use crate::error::Result;

fn check_labels(labels: &[u8]) -> Result<()> {
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(crate::Error::InvalidArgument(format!("binary label {bad}")));
    }
    Ok(())
}

/// Full expansion; gradients flow to f, h and h'.
pub fn likelihood_expectation_binary(
    f: &[f64],
    h: &[f64],
    h_prime: &[f64],
    labels: &[u8],
    eps: f64,
) -> Result<LossBundle> {
    let n = f.len();
    check_len(n, h.len())?;
    check_len(n, h_prime.len())?;
    check_len(n, labels.len())?;
    check_labels(labels)?;
    let (mut df, mut dh, mut dhp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut value = 0.0;
    for i in 0..n {
        let fi = f[i];
        let (hi, mh) = clamp(h[i], eps);
        let (pi, mp) = clamp(h_prime[i], eps);
        if labels[i] == 1 {
            value += pi.ln() * fi + hi.ln() * (1.0 - fi);
            df[i] = pi.ln() - hi.ln();
            dhp[i] = mp * fi / pi;
            dh[i] = mh * (1.0 - fi) / hi;
        } else {
            value += (1.0 - pi).ln() * fi + (1.0 - hi).ln() * (1.0 - fi);
            df[i] = (1.0 - pi).ln() - (1.0 - hi).ln();
            dhp[i] = -mp * fi / (1.0 - pi);
            dh[i] = -mh * (1.0 - fi) / (1.0 - hi);
        }
    }
    Ok(LossBundle::new(value)
        .with_grad(Role::Target, df)
        .with_grad(Role::ChannelNeg, dh)
        .with_grad(Role::ChannelPos, dhp))
}

/// Denoising-positive expectation (h' = 1, -log(1 - h') := `c`).
/// Gradients flow to f and h only.
pub fn dp_expectation(f: &[f64], h: &[f64], labels: &[u8], c: f64, eps: f64) -> Result<LossBundle> {
    let n = f.len();
    check_len(n, h.len())?;
    check_len(n, labels.len())?;
    check_labels(labels)?;
    let (mut df, mut dh) = (vec![0.0; n], vec![0.0; n]);
    let mut value = 0.0;
    for i in 0..n {
        let fi = f[i];
        let (hi, mh) = clamp(h[i], eps);
        if labels[i] == 1 {
            value += hi.ln() * (1.0 - fi);
            df[i] = -hi.ln();
            dh[i] = mh * (1.0 - fi) / hi;
        } else {
            value += -c * fi + (1.0 - hi).ln() * (1.0 - fi);
            df[i] = -c - (1.0 - hi).ln();
            dh[i] = -mh * (1.0 - fi) / (1.0 - hi);
        }
    }
    Ok(LossBundle::new(value)
        .with_grad(Role::Target, df)
        .with_grad(Role::ChannelNeg, dh))
}

/// Denoising-negative expectation (h = 0, -log h := `c`).
/// Gradients flow to f and h' only.
pub fn dn_expectation(f: &[f64], h_prime: &[f64], labels: &[u8], c: f64, eps: f64) -> Result<LossBundle> {
    let n = f.len();
    check_len(n, h_prime.len())?;
    check_len(n, labels.len())?;
    check_labels(labels)?;
    let (mut df, mut dhp) = (vec![0.0; n], vec![0.0; n]);
    let mut value = 0.0;
    for i in 0..n {
        let fi = f[i];
        let (pi, mp) = clamp(h_prime[i], eps);
        if labels[i] == 1 {
            value += pi.ln() * fi - c * (1.0 - fi);
            df[i] = pi.ln() + c;
            dhp[i] = mp * fi / pi;
        } else {
            value += (1.0 - pi).ln() * fi;
            df[i] = (1.0 - pi).ln();
            dhp[i] = -mp * fi / (1.0 - pi);
        }
    }
    Ok(LossBundle::new(value)
        .with_grad(Role::Target, df)
        .with_grad(Role::ChannelPos, dhp))
}
