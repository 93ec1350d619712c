//! Composite denoising objectives over models.
//!
//! Every objective is averaged over the batch: `(-E + KL) / B`. Returned
//! gradients are with respect to model parameters; regularisation is left
//! to the trainer.

use serde::{Deserialize, Serialize};

use super::{
    dn_expectation, dp_expectation, kl_bernoulli_grad, kl_categorical_grad, multiclass_expectation_phase1,
    multiclass_expectation_phase2, DecaConfig, LossBundle, Role, GRAD_CHUNK,
};
use crate::error::{Error, Result};
use crate::model::{Input, Model};
use crate::par;

/// A binary example with its observed label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Labeled<'a> {
    pub input: Input<'a>,
    pub label: u8,
}

/// A multi-class example with its observed label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassExample<'a> {
    pub features: &'a [f64],
    pub label: usize,
}

/// Sub-task of the alternating binary routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinaryPhase {
    /// Negatives treated as clean; trains h.
    DenoisePositive,
    /// Positives treated as clean; trains h'.
    DenoiseNegative,
}

impl BinaryPhase {
    /// Even steps denoise positives, odd steps negatives.
    pub fn at(count: usize) -> Self {
        if count.is_multiple_of(2) {
            BinaryPhase::DenoisePositive
        } else {
            BinaryPhase::DenoiseNegative
        }
    }

    /// The multi-class focus class this step corresponds to.
    pub fn focus_class(self) -> usize {
        match self {
            BinaryPhase::DenoisePositive => 0,
            BinaryPhase::DenoiseNegative => 1,
        }
    }
}

/// Which multi-class objective a step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiPhase {
    /// Non-focus channel log-probabilities replaced by constants.
    Substituted,
    /// Live non-focus channel values without gradient to the channel model.
    StopGradient,
}

/// Sum over the batch of `upstream[i] . d out(x_i) / d params`.
pub(crate) fn backprop(model: &Model, inputs: &[Input], upstream: &[f64]) -> Vec<f64> {
    let k = model.num_outputs();
    debug_assert_eq!(upstream.len(), inputs.len() * k);
    par::chunked_sum(inputs.len(), GRAD_CHUNK, model.num_params(), |range, acc| {
        for i in range {
            let up = &upstream[i * k..(i + 1) * k];
            if up.iter().any(|&u| u != 0.0) {
                model.backward(&inputs[i], up, acc);
            }
        }
    })
}

fn probs(model: &Model, inputs: &[Input]) -> Vec<f64> {
    par::map(inputs, |x| model.prob(x))
}

fn empty_batch() -> Error {
    Error::InvalidArgument("empty batch".into())
}

/// Channel term of one binary step, negated and averaged. Returns the value
/// and probability-level gradients for f and for the trained channel.
fn binary_channel_term(
    f: &[f64],
    channel: &[f64],
    labels: &[u8],
    cfg: &DecaConfig,
    phase: BinaryPhase,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (bundle, role) = match phase {
        BinaryPhase::DenoisePositive => {
            (dp_expectation(f, channel, labels, cfg.dp_constant(), cfg.prob_clamp)?, Role::ChannelNeg)
        }
        BinaryPhase::DenoiseNegative => {
            (dn_expectation(f, channel, labels, cfg.dn_constant(), cfg.prob_clamp)?, Role::ChannelPos)
        }
    };
    let scale = -1.0 / labels.len() as f64;
    let df = bundle.grad(Role::Target).expect("target grad").iter().map(|g| g * scale).collect();
    let dc = bundle.grad(role).expect("channel grad").iter().map(|g| g * scale).collect();
    Ok((bundle.value * scale, df, dc))
}

fn channel_role(phase: BinaryPhase) -> Role {
    match phase {
        BinaryPhase::DenoisePositive => Role::ChannelNeg,
        BinaryPhase::DenoiseNegative => Role::ChannelPos,
    }
}

fn channel_model<'m>(h: &'m Model, h_prime: &'m Model, phase: BinaryPhase) -> &'m Model {
    match phase {
        BinaryPhase::DenoisePositive => h,
        BinaryPhase::DenoiseNegative => h_prime,
    }
}

/// `-E + alpha * KL(g || f) + (1 - alpha) * KL(f || g)`, co-training the
/// auxiliary model `g`. Only the channel model used by `phase` receives a
/// gradient.
pub fn deca_loss(
    f: &Model,
    g: &Model,
    h: &Model,
    h_prime: &Model,
    batch: &[Labeled],
    cfg: &DecaConfig,
    phase: BinaryPhase,
) -> Result<LossBundle> {
    if batch.is_empty() {
        return Err(empty_batch());
    }
    let inputs: Vec<Input> = batch.iter().map(|b| b.input).collect();
    let labels: Vec<u8> = batch.iter().map(|b| b.label).collect();
    let channel = channel_model(h, h_prime, phase);
    let fp = probs(f, &inputs);
    let gp = probs(g, &inputs);
    let cp = probs(channel, &inputs);
    let (mut value, mut df, dc) = binary_channel_term(&fp, &cp, &labels, cfg, phase)?;
    let n = batch.len() as f64;
    let a = cfg.alpha;
    let mut dg = vec![0.0; batch.len()];
    for i in 0..batch.len() {
        let (v_gf, d_g1, d_f1) = kl_bernoulli_grad(gp[i], fp[i], cfg.prob_clamp);
        let (v_fg, d_f2, d_g2) = kl_bernoulli_grad(fp[i], gp[i], cfg.prob_clamp);
        value += (a * v_gf + (1.0 - a) * v_fg) / n;
        df[i] += (a * d_f1 + (1.0 - a) * d_f2) / n;
        dg[i] = (a * d_g1 + (1.0 - a) * d_g2) / n;
    }
    Ok(LossBundle::new(value)
        .with_grad(Role::Target, backprop(f, &inputs, &df))
        .with_grad(Role::Auxiliary, backprop(g, &inputs, &dg))
        .with_grad(channel_role(phase), backprop(channel, &inputs, &dc)))
}

/// `-E + alpha * KL(f || f') + (1 - alpha) * KL(f' || f)` with a frozen
/// prior `f'`, which receives no gradient.
pub fn deca_p_loss(
    f: &Model,
    prior: &Model,
    h: &Model,
    h_prime: &Model,
    batch: &[Labeled],
    cfg: &DecaConfig,
    phase: BinaryPhase,
) -> Result<LossBundle> {
    if batch.is_empty() {
        return Err(empty_batch());
    }
    let inputs: Vec<Input> = batch.iter().map(|b| b.input).collect();
    let labels: Vec<u8> = batch.iter().map(|b| b.label).collect();
    let channel = channel_model(h, h_prime, phase);
    let fp = probs(f, &inputs);
    let pp = probs(prior, &inputs);
    let cp = probs(channel, &inputs);
    let (mut value, mut df, dc) = binary_channel_term(&fp, &cp, &labels, cfg, phase)?;
    let n = batch.len() as f64;
    let a = cfg.alpha;
    for i in 0..batch.len() {
        let (v_fp, d_f1, _) = kl_bernoulli_grad(fp[i], pp[i], cfg.prob_clamp);
        let (v_pf, _, d_f2) = kl_bernoulli_grad(pp[i], fp[i], cfg.prob_clamp);
        value += (a * v_fp + (1.0 - a) * v_pf) / n;
        df[i] += (a * d_f1 + (1.0 - a) * d_f2) / n;
    }
    Ok(LossBundle::new(value)
        .with_grad(Role::Target, backprop(f, &inputs, &df))
        .with_grad(channel_role(phase), backprop(channel, &inputs, &dc)))
}

/// `-E_k + sum_i KL(f(x_i) || f'(x_i))` at focus class `k`.
///
/// The channel model reads the target's embedding tap, treated as a
/// constant input (no gradient flows from the channel into `f`).
pub fn deca_p_multiclass_loss(
    f: &Model,
    prior: &Model,
    h_multi: &Model,
    batch: &[ClassExample],
    cfg: &DecaConfig,
    k: usize,
    phase: MultiPhase,
) -> Result<LossBundle> {
    if batch.is_empty() {
        return Err(empty_batch());
    }
    let classes = f.num_outputs();
    if classes < 2 || prior.num_outputs() != classes || h_multi.num_outputs() != classes {
        return Err(Error::InvalidArgument(format!(
            "class counts disagree: target {classes}, prior {}, channel {}",
            prior.num_outputs(),
            h_multi.num_outputs()
        )));
    }
    if h_multi.spec().input_dim != f.embedding_dim() {
        return Err(Error::DimensionMismatch { expected: f.embedding_dim(), actual: h_multi.spec().input_dim });
    }
    if k >= classes {
        return Err(Error::InvalidArgument(format!("focus class {k} outside 0..{classes}")));
    }
    let n = batch.len();
    let cc = classes * classes;
    let inputs: Vec<Input> = batch.iter().map(|b| Input::Dense(b.features)).collect();
    let labels: Vec<usize> = batch.iter().map(|b| b.label).collect();

    // Per example: f simplex, prior simplex, embedding, channel rows.
    struct Row {
        f: Vec<f64>,
        prior: Vec<f64>,
        emb: Vec<f64>,
        channel: Vec<f64>,
    }
    let rows: Vec<Row> = par::map(&inputs, |x| {
        let emb = f.embed(x);
        let mut channel = vec![0.0; cc];
        for c in 0..classes {
            if c == k || phase == MultiPhase::StopGradient {
                let out = h_multi.forward(&Input::Conditioned { features: &emb, class: c });
                channel[c * classes..(c + 1) * classes].copy_from_slice(&out);
            }
        }
        Row { f: f.forward(x), prior: prior.forward(x), emb, channel }
    });
    let f_flat: Vec<f64> = rows.iter().flat_map(|r| r.f.iter().copied()).collect();
    let h_flat: Vec<f64> = rows.iter().flat_map(|r| r.channel.iter().copied()).collect();
    let bundle = match phase {
        MultiPhase::Substituted => {
            let (c1, c2) = cfg.class_constants(k);
            multiclass_expectation_phase1(&f_flat, &h_flat, &labels, classes, k, c1, c2, cfg.prob_clamp)?
        }
        MultiPhase::StopGradient => {
            multiclass_expectation_phase2(&f_flat, &h_flat, &labels, classes, k, cfg.prob_clamp)?
        }
    };
    let scale = 1.0 / n as f64;
    let mut value = -bundle.value * scale;
    let mut df: Vec<f64> = bundle.grad(Role::Target).expect("target").iter().map(|g| -g * scale).collect();
    let dh_all = bundle.grad(Role::Channel).expect("channel");
    for (i, r) in rows.iter().enumerate() {
        let (v, gp, _) = kl_categorical_grad(&r.f, &r.prior, cfg.prob_clamp)?;
        value += v * scale;
        for c in 0..classes {
            df[i * classes + c] += gp[c] * scale;
        }
    }
    // Only row k of the channel carries gradient.
    let dh: Vec<f64> = (0..n)
        .flat_map(|i| {
            let start = i * cc + k * classes;
            dh_all[start..start + classes].iter().map(move |g| -g * scale)
        })
        .collect();
    let h_inputs: Vec<Input> = rows.iter().map(|r| Input::Conditioned { features: &r.emb, class: k }).collect();
    Ok(LossBundle::new(value)
        .with_grad(Role::Target, backprop(f, &inputs, &df))
        .with_grad(Role::Channel, backprop(h_multi, &h_inputs, &dh)))
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::loss::kl_bernoulli;
    use crate::model::{build_model, finite_difference_check, ModelSpec};
    use crate::rng;

    const NU: usize = 4;
    const NI: usize = 5;

    fn pair_models(seed: u64) -> [Model; 4] {
        let mk = |spec: ModelSpec, s| build_model(&spec.with_seed(s).with_init_scale(0.7)).unwrap();
        [
            mk(ModelSpec::mf(NU, NI, 3), seed),
            mk(ModelSpec::mf(NU, NI, 3), seed + 1),
            mk(ModelSpec::h_pairwise(NU, NI, 2), seed + 2),
            mk(ModelSpec::h_pairwise(NU, NI, 2), seed + 3),
        ]
    }

    fn pair_batch(seed: u64, n: usize) -> Vec<Labeled<'static>> {
        let mut r = rng::stream(seed, 77);
        (0..n)
            .map(|_| Labeled {
                input: Input::Pair { user: r.random_range(0..NU as u32), item: r.random_range(0..NI as u32) },
                label: r.random_range(0..2),
            })
            .collect()
    }

    fn cfg(alpha: f64) -> DecaConfig {
        DecaConfig { alpha, c1: 3.0, c2: 5.0, ..Default::default() }
    }

    /// Finite differences over the concatenation of the listed models.
    fn check_all(models: &[&Model], grads: &[&[f64]], value: impl Fn(&[Model]) -> f64) {
        let params: Vec<f64> = models.iter().flat_map(|m| m.params().iter().copied()).collect();
        let analytic: Vec<f64> = grads.iter().flat_map(|g| g.iter().copied()).collect();
        let split = |x: &[f64]| {
            let mut off = 0;
            models
                .iter()
                .map(|m| {
                    let out = m.with_params(x[off..off + m.num_params()].to_vec());
                    off += m.num_params();
                    out
                })
                .collect::<Vec<_>>()
        };
        let r = finite_difference_check(&params, |x| value(&split(x)), &analytic, 1e-3);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn phase_schedule_alternates() {
        let seq: Vec<_> = (0..6).map(BinaryPhase::at).collect();
        use BinaryPhase::*;
        assert_eq!(seq, [DenoisePositive, DenoiseNegative, DenoisePositive, DenoiseNegative, DenoisePositive, DenoiseNegative]);
    }

    #[test]
    fn deca_gradients_match_finite_differences() {
        let [f, g, h, hp] = pair_models(3);
        let batch = pair_batch(4, 4);
        for phase in [BinaryPhase::DenoisePositive, BinaryPhase::DenoiseNegative] {
            let b = deca_loss(&f, &g, &h, &hp, &batch, &cfg(0.3), phase).unwrap();
            let role = channel_role(phase);
            let zero_h = vec![0.0; h.num_params()];
            let (gh, ghp) = match phase {
                BinaryPhase::DenoisePositive => (b.grad(role).unwrap(), zero_h.as_slice()),
                BinaryPhase::DenoiseNegative => (zero_h.as_slice(), b.grad(role).unwrap()),
            };
            assert!(b.grad(Role::Prior).is_none());
            check_all(
                &[&f, &g, &h, &hp],
                &[b.grad(Role::Target).unwrap(), b.grad(Role::Auxiliary).unwrap(), gh, ghp],
                |m| deca_loss(&m[0], &m[1], &m[2], &m[3], &batch, &cfg(0.3), phase).unwrap().value,
            );
        }
    }

    #[test]
    fn deca_kl_vanishes_when_models_match() {
        let [f, _, h, hp] = pair_models(9);
        let batch = pair_batch(1, 6);
        let b = deca_loss(&f, &f, &h, &hp, &batch, &cfg(0.5), BinaryPhase::DenoisePositive).unwrap();
        let fp: Vec<f64> = batch.iter().map(|x| f.prob(&x.input)).collect();
        let hv: Vec<f64> = batch.iter().map(|x| h.prob(&x.input)).collect();
        let labels: Vec<u8> = batch.iter().map(|x| x.label).collect();
        let e = dp_expectation(&fp, &hv, &labels, 3.0, 1e-7).unwrap();
        assert!((b.value + e.value / 6.0).abs() < 1e-12);
    }

    #[test]
    fn deca_alpha_endpoints_weight_kl_directions() {
        let [f, g, h, hp] = pair_models(21);
        let batch = pair_batch(2, 5);
        let base = {
            let fp: Vec<f64> = batch.iter().map(|x| f.prob(&x.input)).collect();
            let hv: Vec<f64> = batch.iter().map(|x| h.prob(&x.input)).collect();
            let labels: Vec<u8> = batch.iter().map(|x| x.label).collect();
            -dp_expectation(&fp, &hv, &labels, 3.0, 1e-7).unwrap().value / 5.0
        };
        let kl = |rev: bool| -> f64 {
            batch
                .iter()
                .map(|x| {
                    let (a, b) = (f.prob(&x.input), g.prob(&x.input));
                    if rev { kl_bernoulli(b, a) } else { kl_bernoulli(a, b) }
                })
                .sum::<f64>()
                / 5.0
        };
        let one = deca_loss(&f, &g, &h, &hp, &batch, &cfg(1.0), BinaryPhase::DenoisePositive).unwrap();
        assert!((one.value - base - kl(true)).abs() < 1e-12);
        let zero = deca_loss(&f, &g, &h, &hp, &batch, &cfg(0.0), BinaryPhase::DenoisePositive).unwrap();
        assert!((zero.value - base - kl(false)).abs() < 1e-12);
    }

    #[test]
    fn deca_p_gradients_and_frozen_prior() {
        let [f, prior, h, hp] = pair_models(30);
        let batch = pair_batch(5, 4);
        for phase in [BinaryPhase::DenoisePositive, BinaryPhase::DenoiseNegative] {
            let b = deca_p_loss(&f, &prior, &h, &hp, &batch, &cfg(0.6), phase).unwrap();
            assert!(b.grad(Role::Prior).is_none());
            assert!(b.grad(Role::Auxiliary).is_none());
            let channel = channel_model(&h, &hp, phase);
            check_all(&[&f, channel], &[b.grad(Role::Target).unwrap(), b.grad(channel_role(phase)).unwrap()], |m| {
                let (hh, hhp) = match phase {
                    BinaryPhase::DenoisePositive => (&m[1], &hp),
                    BinaryPhase::DenoiseNegative => (&h, &m[1]),
                };
                deca_p_loss(&m[0], &prior, hh, hhp, &batch, &cfg(0.6), phase).unwrap().value
            });
        }
    }

    #[test]
    fn deca_p_starts_without_kl() {
        let [f, _, h, hp] = pair_models(40);
        let batch = pair_batch(6, 8);
        let same = deca_p_loss(&f, &f, &h, &hp, &batch, &cfg(0.5), BinaryPhase::DenoiseNegative).unwrap();
        let fp: Vec<f64> = batch.iter().map(|x| f.prob(&x.input)).collect();
        let hv: Vec<f64> = batch.iter().map(|x| hp.prob(&x.input)).collect();
        let labels: Vec<u8> = batch.iter().map(|x| x.label).collect();
        let e = dn_expectation(&fp, &hv, &labels, 5.0, 1e-7).unwrap();
        assert!((same.value + e.value / 8.0).abs() < 1e-12);
    }

    fn class_setup(classes: usize, seed: u64) -> (Model, Model, Model, Vec<Vec<f64>>, Vec<usize>) {
        let dim = 3;
        let spec = ModelSpec::mlp_classifier(dim, vec![4], classes).with_init_scale(0.8);
        let f = build_model(&spec.clone().with_seed(seed)).unwrap();
        let prior = build_model(&spec.with_seed(seed + 1)).unwrap();
        let h = build_model(&ModelSpec::h_multiclass(4, classes).with_seed(seed + 2).with_init_scale(0.6)).unwrap();
        let mut r = rng::stream(seed, 3);
        let feats: Vec<Vec<f64>> = (0..4).map(|_| (0..dim).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let labels = (0..4).map(|_| r.random_range(0..classes)).collect();
        (f, prior, h, feats, labels)
    }

    #[test]
    fn multiclass_gradients_match_finite_differences() {
        let (f, prior, h, feats, labels) = class_setup(3, 50);
        let batch: Vec<ClassExample> =
            feats.iter().zip(&labels).map(|(x, &l)| ClassExample { features: x, label: l }).collect();
        let c = DecaConfig { c1: 4.0, c2: 2.0, ..Default::default() };
        for (k, phase) in [(0, MultiPhase::Substituted), (2, MultiPhase::Substituted), (1, MultiPhase::StopGradient)] {
            let b = deca_p_multiclass_loss(&f, &prior, &h, &batch, &c, k, phase).unwrap();
            // The channel input is detached: differentiate f with h held at
            // the current embeddings by checking f and h separately.
            let gh = b.grad(Role::Channel).unwrap();
            check_all(&[&h], &[gh], |m| {
                if phase == MultiPhase::StopGradient {
                    // Stopped rows are value-only; differentiate row k alone.
                    stopped_value(&f, &prior, &h, &m[0], &batch, &c, k)
                } else {
                    deca_p_multiclass_loss(&f, &prior, &m[0], &batch, &c, k, phase).unwrap().value
                }
            });
            let detached = |fm: &Model| detached_value(fm, &f, &prior, &h, &batch, &c, k, phase);
            check_all(&[&f], &[b.grad(Role::Target).unwrap()], |m| detached(&m[0]));
        }
    }

    /// Loss with `h_live` on row k and `h_fixed` elsewhere.
    fn stopped_value(
        f: &Model,
        prior: &Model,
        h_fixed: &Model,
        h_live: &Model,
        batch: &[ClassExample],
        c: &DecaConfig,
        k: usize,
    ) -> f64 {
        let classes = f.num_outputs();
        let mut total = 0.0;
        for ex in batch {
            let x = Input::Dense(ex.features);
            let emb = f.embed(&x);
            let p = f.forward(&x);
            let mut channel = Vec::new();
            for cl in 0..classes {
                let m = if cl == k { h_live } else { h_fixed };
                channel.extend(m.forward(&Input::Conditioned { features: &emb, class: cl }));
            }
            let e = multiclass_expectation_phase2(&p, &channel, &[ex.label], classes, k, c.prob_clamp).unwrap();
            total += -e.value + crate::loss::kl_categorical(&p, &prior.forward(&x)).unwrap();
        }
        total / batch.len() as f64
    }

    /// Loss where the channel reads the embeddings of `f_emb` but `f` varies.
    #[allow(clippy::too_many_arguments)]
    fn detached_value(
        f: &Model,
        f_emb: &Model,
        prior: &Model,
        h: &Model,
        batch: &[ClassExample],
        c: &DecaConfig,
        k: usize,
        phase: MultiPhase,
    ) -> f64 {
        let classes = f.num_outputs();
        let mut total = 0.0;
        for ex in batch {
            let x = Input::Dense(ex.features);
            let emb = f_emb.embed(&x);
            let p = f.forward(&x);
            let channel: Vec<f64> = (0..classes)
                .flat_map(|cl| h.forward(&Input::Conditioned { features: &emb, class: cl }))
                .collect();
            let e = match phase {
                MultiPhase::Substituted => {
                    let (c1, c2) = c.class_constants(k);
                    multiclass_expectation_phase1(&p, &channel, &[ex.label], classes, k, c1, c2, c.prob_clamp)
                }
                MultiPhase::StopGradient => {
                    multiclass_expectation_phase2(&p, &channel, &[ex.label], classes, k, c.prob_clamp)
                }
            }
            .unwrap();
            total += -e.value + crate::loss::kl_categorical(&p, &prior.forward(&x)).unwrap();
        }
        total / batch.len() as f64
    }

    #[test]
    fn multiclass_kl_vanishes_for_identical_prior() {
        let (f, _, h, feats, labels) = class_setup(4, 60);
        let batch: Vec<ClassExample> =
            feats.iter().zip(&labels).map(|(x, &l)| ClassExample { features: x, label: l }).collect();
        let c = DecaConfig::default();
        let with = deca_p_multiclass_loss(&f, &f, &h, &batch, &c, 1, MultiPhase::Substituted).unwrap();
        let alone = detached_value(&f, &f, &f, &h, &batch, &c, 1, MultiPhase::Substituted);
        let kl_free: f64 = batch
            .iter()
            .map(|ex| {
                let x = Input::Dense(ex.features);
                crate::loss::kl_categorical(&f.forward(&x), &f.forward(&x)).unwrap()
            })
            .sum();
        assert_eq!(kl_free, 0.0);
        assert!((with.value - alone).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_batch_and_bad_focus() {
        let [f, g, h, hp] = pair_models(1);
        assert!(deca_loss(&f, &g, &h, &hp, &[], &cfg(0.5), BinaryPhase::DenoisePositive).is_err());
        let (f, prior, h, feats, labels) = class_setup(3, 2);
        let batch = [ClassExample { features: &feats[0], label: labels[0] }];
        assert!(deca_p_multiclass_loss(&f, &prior, &h, &batch, &DecaConfig::default(), 3, MultiPhase::Substituted)
            .is_err());
    }
}
