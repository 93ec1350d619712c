//! Multi-class focus-class expectations.
//!
//! `f` is an `N x C` row-major matrix of class probabilities. `channel` is
//! an `N x C x C` tensor: `channel[i][c][o] = P(observed o | true c)` for
//! example `i`. At focus class `k` only the row `channel[i][k]` is learned;
//! the other rows are the identity with `-log 0` replaced by `C_k1`
//! (observed `k`) or `C_k2` (observed neither `k` nor the true class).

use super::{check_len, clamp, LossBundle, Role};
use crate::error::{Error, Result};

fn check_shapes(f: &[f64], channel: &[f64], labels: &[usize], classes: usize, k: usize) -> Result<usize> {
    if classes < 2 {
        return Err(Error::InvalidArgument("need at least two classes".into()));
    }
    if k >= classes {
        return Err(Error::InvalidArgument(format!("focus class {k} outside 0..{classes}")));
    }
    let n = labels.len();
    check_len(n * classes, f.len())?;
    check_len(n * classes * classes, channel.len())?;
    if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidArgument(format!("label {bad} outside 0..{classes}")));
    }
    Ok(n)
}

/// Substituted-constant objective at focus class `k`:
///
/// ```text
/// observed k:      -C_k1 * sum_{c != k} P(c)        + log h(k -> k) * P(k)
/// observed o != k: -C_k2 * sum_{c not in {k, o}} P(c) + log h(k -> o) * P(k)
/// ```
///
/// Gradients flow to `f` and to row `k` of the channel.
#[allow(clippy::too_many_arguments)]
pub fn multiclass_expectation_phase1(
    f: &[f64],
    channel: &[f64],
    labels: &[usize],
    classes: usize,
    k: usize,
    c_k1: f64,
    c_k2: f64,
    eps: f64,
) -> Result<LossBundle> {
    let n = check_shapes(f, channel, labels, classes, k)?;
    let cc = classes * classes;
    let mut df = vec![0.0; f.len()];
    let mut dh = vec![0.0; channel.len()];
    let mut value = 0.0;
    for i in 0..n {
        let p = &f[i * classes..(i + 1) * classes];
        let obs = labels[i];
        let slot = i * cc + k * classes + obs;
        let (hk, mask) = clamp(channel[slot], eps);
        let log_hk = hk.ln();
        let row = &mut df[i * classes..(i + 1) * classes];
        let constant = if obs == k { c_k1 } else { c_k2 };
        for c in 0..classes {
            if c == k {
                value += log_hk * p[k];
                row[c] = log_hk;
            } else if c != obs {
                value -= constant * p[c];
                row[c] = -constant;
            }
        }
        dh[slot] = mask * p[k] / hk;
    }
    Ok(LossBundle::new(value)
        .with_grad(Role::Target, df)
        .with_grad(Role::Channel, dh))
}

/// Stop-gradient objective at focus class `k`: the constants of phase 1 are
/// replaced by the live `log h(c -> o)` values, whose gradient to the
/// channel is suppressed for `c != k`. `f` receives gradients from all terms.
pub fn multiclass_expectation_phase2(
    f: &[f64],
    channel: &[f64],
    labels: &[usize],
    classes: usize,
    k: usize,
    eps: f64,
) -> Result<LossBundle> {
    let n = check_shapes(f, channel, labels, classes, k)?;
    let cc = classes * classes;
    let mut df = vec![0.0; f.len()];
    let mut dh = vec![0.0; channel.len()];
    let mut value = 0.0;
    for i in 0..n {
        let p = &f[i * classes..(i + 1) * classes];
        let obs = labels[i];
        let row = &mut df[i * classes..(i + 1) * classes];
        for c in 0..classes {
            // The identity entry P(obs | true = obs) for obs != k stays at log 1.
            if c != k && c == obs {
                continue;
            }
            let slot = i * cc + c * classes + obs;
            let (hv, mask) = clamp(channel[slot], eps);
            value += hv.ln() * p[c];
            row[c] = hv.ln();
            if c == k {
                dh[slot] = mask * p[k] / hv;
            }
        }
    }
    Ok(LossBundle::new(value)
        .with_grad(Role::Target, df)
        .with_grad(Role::Channel, dh))
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::loss::{dn_expectation, dp_expectation, DEFAULT_EPS};
    use crate::model::finite_difference_check;
    use crate::rng;

    const EPS: f64 = DEFAULT_EPS;

    fn simplex(r: &mut crate::rng::Rng, c: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..c).map(|_| r.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }

    fn instance(n: usize, classes: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
        let mut r = rng::stream(seed, 31);
        let f: Vec<f64> = (0..n).flat_map(|_| simplex(&mut r, classes)).collect();
        let h: Vec<f64> = (0..n * classes).flat_map(|_| simplex(&mut r, classes)).collect();
        let labels = (0..n).map(|_| r.random_range(0..classes)).collect();
        (f, h, labels)
    }

    /// Σ over all C^N joint assignments of Π P(y_i) · Σ_i log P(obs_i | y_i).
    fn enumerate(f: &[f64], labels: &[usize], classes: usize, log_channel: impl Fn(usize, usize, usize) -> f64) -> f64 {
        let n = labels.len();
        let mut total = 0.0;
        for code in 0..classes.pow(n as u32) {
            let mut rest = code;
            let ys: Vec<usize> = (0..n)
                .map(|_| {
                    let y = rest % classes;
                    rest /= classes;
                    y
                })
                .collect();
            let prob: f64 = (0..n).map(|i| f[i * classes + ys[i]]).product();
            let ll: f64 = (0..n).map(|i| log_channel(i, ys[i], labels[i])).sum();
            total += prob * ll;
        }
        total
    }

    #[test]
    fn phase1_matches_enumeration() {
        let (f, h, labels) = instance(2, 3, 1);
        let (k, c1, c2) = (1, 9.0, 4.0);
        let b = multiclass_expectation_phase1(&f, &h, &labels, 3, k, c1, c2, EPS).unwrap();
        let oracle = enumerate(&f, &labels, 3, |i, y, obs| {
            if y == k {
                h[i * 9 + k * 3 + obs].ln()
            } else if obs == y {
                0.0
            } else if obs == k {
                -c1
            } else {
                -c2
            }
        });
        assert!((b.value - oracle).abs() < 1e-9);
    }

    #[test]
    fn certain_focus_prediction_has_no_penalty() {
        let f = [0.0, 1.0, 0.0];
        let h = [1.0 / 3.0; 9];
        let b = multiclass_expectation_phase1(&f, &h, &[1], 3, 1, 100.0, 100.0, EPS).unwrap();
        assert!((b.value - (1.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn two_classes_reduce_to_binary_steps() {
        let (f, h, labels) = instance(3, 2, 8);
        let c = 6.0;
        let f_pos: Vec<f64> = (0..3).map(|i| f[i * 2 + 1]).collect();
        let labels_b: Vec<u8> = labels.iter().map(|&l| l as u8).collect();
        // Focus 0 learns the true-0 row: h = P(obs 1 | true 0).
        let h_neg: Vec<f64> = (0..3).map(|i| h[i * 4 + 1]).collect();
        // Focus 1 learns the true-1 row: h' = P(obs 1 | true 1).
        let h_pos: Vec<f64> = (0..3).map(|i| h[i * 4 + 3]).collect();
        let m0 = multiclass_expectation_phase1(&f, &h, &labels, 2, 0, c, c, EPS).unwrap();
        let dp = dp_expectation(&f_pos, &h_neg, &labels_b, c, EPS).unwrap();
        assert!((m0.value - dp.value).abs() < 1e-9);
        let m1 = multiclass_expectation_phase1(&f, &h, &labels, 2, 1, c, c, EPS).unwrap();
        let dn = dn_expectation(&f_pos, &h_pos, &labels_b, c, EPS).unwrap();
        assert!((m1.value - dn.value).abs() < 1e-9);
        // Gradient mapping: d/df_pos = d/dP(1) - d/dP(0).
        let g = m0.grad(Role::Target).unwrap();
        for i in 0..3 {
            let mapped = g[i * 2 + 1] - g[i * 2];
            assert!((mapped - dp.grad(Role::Target).unwrap()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn phase2_replaces_constants_with_live_logs() {
        let (f, h, labels) = instance(3, 4, 12);
        let k = 2;
        let b = multiclass_expectation_phase2(&f, &h, &labels, 4, k, EPS).unwrap();
        let oracle = enumerate(&f, &labels, 4, |i, y, obs| {
            if y != k && obs == y {
                0.0
            } else {
                h[i * 16 + y * 4 + obs].ln()
            }
        });
        assert!((b.value - oracle).abs() < 1e-9);
        let dh = b.grad(Role::Channel).unwrap();
        for i in 0..3 {
            for c in (0..4).filter(|&c| c != k) {
                for o in 0..4 {
                    assert_eq!(dh[i * 16 + c * 4 + o], 0.0);
                }
            }
        }
    }

    #[test]
    fn phase_gradients_match_finite_differences() {
        let (f, h, labels) = instance(3, 3, 40);
        let nf = f.len();
        let params: Vec<f64> = [f.clone(), h.clone()].concat();
        let b = multiclass_expectation_phase1(&f, &h, &labels, 3, 2, 5.0, 8.0, EPS).unwrap();
        let grad = [b.grad(Role::Target).unwrap(), b.grad(Role::Channel).unwrap()].concat();
        let r = finite_difference_check(
            &params,
            |x| multiclass_expectation_phase1(&x[..nf], &x[nf..], &labels, 3, 2, 5.0, 8.0, EPS).unwrap().value,
            &grad,
            1e-6,
        );
        assert!(r.passed, "{r:?}");

        // Phase 2: f-gradient against differences with the channel held fixed.
        let b = multiclass_expectation_phase2(&f, &h, &labels, 3, 0, EPS).unwrap();
        let r = finite_difference_check(
            &f,
            |x| multiclass_expectation_phase2(x, &h, &labels, 3, 0, EPS).unwrap().value,
            b.grad(Role::Target).unwrap(),
            1e-6,
        );
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn focus_out_of_range() {
        let (f, h, labels) = instance(2, 3, 2);
        assert!(multiclass_expectation_phase1(&f, &h, &labels, 3, 3, 1.0, 1.0, EPS).is_err());
        assert!(multiclass_expectation_phase2(&f, &h, &labels, 3, 5, EPS).is_err());
    }
}
