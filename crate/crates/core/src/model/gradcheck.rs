//! Central finite-difference gradient checks.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Input, Model};
use crate::rng::{self, tag};

pub const FD_STEP: f64 = 1e-5;

/// Denominator floor of the relative error, so entries where both gradients
/// vanish compare on an absolute scale.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Parameter index with the largest relative error.
    pub worst_index: Option<usize>,
    pub num_checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares `analytic` with central differences of `value` around `params`.
///
/// `value` must be a pure function of the parameter vector.
pub fn finite_difference_check(
    params: &[f64],
    value: impl Fn(&[f64]) -> f64,
    analytic: &[f64],
    tolerance: f64,
) -> GradReport {
    assert_eq!(params.len(), analytic.len(), "gradient layout");
    let mut work = params.to_vec();
    let mut max_rel = 0.0f64;
    let mut max_abs = 0.0f64;
    let mut worst = None;
    for j in 0..params.len() {
        let orig = work[j];
        work[j] = orig + FD_STEP;
        let up = value(&work);
        work[j] = orig - FD_STEP;
        let down = value(&work);
        work[j] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let abs = (numeric - analytic[j]).abs();
        let rel = abs / numeric.abs().max(analytic[j].abs()).max(REL_FLOOR);
        max_abs = max_abs.max(abs);
        if rel > max_rel || worst.is_none() {
            max_rel = max_rel.max(rel);
            worst = Some(j);
        }
    }
    GradReport {
        max_rel_error: max_rel,
        max_abs_error: max_abs,
        worst_index: worst,
        num_checked: params.len(),
        tolerance,
        passed: max_rel.is_finite() && max_rel < tolerance,
    }
}

/// Checks `backward` on the functional `sum_probe sum_c w[probe][c] * out[c]`
/// with fixed pseudo-random weights `w` in [-1, 1].
pub fn grad_check(model: &Model, probes: &[Input], tolerance: f64) -> GradReport {
    let k = model.num_outputs();
    let mut rng = rng::stream(0, tag::PROBE);
    let weights: Vec<Vec<f64>> = probes
        .iter()
        .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut analytic = vec![0.0; model.num_params()];
    for (x, w) in probes.iter().zip(&weights) {
        model.backward(x, w, &mut analytic);
    }
    let value = |p: &[f64]| -> f64 {
        let m = model.with_params(p.to_vec());
        probes
            .iter()
            .zip(&weights)
            .map(|(x, w)| m.forward(x).iter().zip(w).map(|(o, c)| o * c).sum::<f64>())
            .sum()
    };
    finite_difference_check(model.params(), value, &analytic, tolerance)
}
