//! The alternating denoising routines.

use super::{add_l2, drive, ensure_finite, mean, minibatch_len, pretrain_prior, Adam, RunReport, Task, TaskMode, Trained};
use crate::error::{Error, Result};
use crate::loss::{deca_loss, deca_p_loss, deca_p_multiclass_loss, BinaryPhase, DecaConfig, LossBundle, MultiPhase, Role};
use crate::model::{build_model, Model, ModelSpec};
use crate::rng::{mix, tag};

/// Focus class of step `count`: `count mod classes`.
pub fn focus_class(count: usize, classes: usize) -> usize {
    count % classes
}

#[derive(Clone)]
struct Slot {
    model: Model,
    opt: Adam,
}

impl Slot {
    fn new(spec: &ModelSpec, cfg: &DecaConfig) -> Result<Self> {
        let model = build_model(spec)?;
        let opt = Adam::new(model.num_params(), cfg.learn_rate);
        Ok(Self { model, opt })
    }

    fn step(&mut self, grad: &[f64]) {
        self.opt.step(self.model.params_mut(), grad);
    }
}

fn require_binary(task: &dyn Task) -> Result<()> {
    if task.mode().is_binary() {
        Ok(())
    } else {
        Err(Error::Config("this routine needs a binary task".into()))
    }
}

/// Adds the target regulariser, checks for divergence and applies the
/// target update. Returns the regularised loss value.
fn finish_step(bundle: &mut LossBundle, target: &mut Slot, cfg: &DecaConfig, epoch: usize, count: usize) -> Result<f64> {
    let mut grad = bundle.grads.remove(&Role::Target).expect("target gradient");
    bundle.value += add_l2(&target.model, &mut grad, cfg.reg_weight);
    bundle.grads.insert(Role::Target, grad);
    ensure_finite(bundle, epoch, count)?;
    target.step(bundle.grad(Role::Target).expect("target gradient"));
    Ok(bundle.value)
}

fn channel_specs(task: &dyn Task, spec: &ModelSpec, seed: u64) -> (ModelSpec, ModelSpec) {
    let base = task.channel_spec(spec);
    (base.clone().with_seed(mix(seed, tag::CHANNEL_NEG)), base.with_seed(mix(seed, tag::CHANNEL_POS)))
}

#[derive(Clone)]
struct DecaState {
    f: Slot,
    g: Slot,
    h: Slot,
    hp: Slot,
    count: usize,
}

/// Co-trained routine: f (seed s1) and the auxiliary g (seed s2) with the
/// channel models, alternating denoising-positive and denoising-negative
/// steps.
pub fn train_deca(task: &dyn Task, spec: &ModelSpec, cfg: &DecaConfig) -> Result<Trained> {
    cfg.validate()?;
    require_binary(task)?;
    task.check_target(spec)?;
    let (h_spec, hp_spec) = channel_specs(task, spec, cfg.seed);
    let state = DecaState {
        f: Slot::new(&spec.clone().with_seed(cfg.seed), cfg)?,
        g: Slot::new(&task.aux_spec(spec).with_seed(cfg.seed_aux), cfg)?,
        h: Slot::new(&h_spec, cfg)?,
        hp: Slot::new(&hp_spec, cfg)?,
        count: 0,
    };
    let batch = minibatch_len(task, cfg);
    let report = RunReport::new("deca", task.mode().name(), cfg);
    let (best, report) = drive(task, cfg, report, state, |s| &s.f.model, |s, epoch| {
        let items = task.epoch_items(None, cfg.seed, epoch)?;
        let (mut total, mut steps) = (0.0, 0);
        for chunk in items.chunks(batch) {
            let phase = BinaryPhase::at(s.count);
            let labeled = task.labeled(chunk);
            let mut b = deca_loss(&s.f.model, &s.g.model, &s.h.model, &s.hp.model, &labeled, cfg, phase)?;
            total += finish_step(&mut b, &mut s.f, cfg, epoch, s.count)?;
            s.g.step(b.grad(Role::Auxiliary).expect("auxiliary gradient"));
            match phase {
                BinaryPhase::DenoisePositive => s.h.step(b.grad(Role::ChannelNeg).expect("h gradient")),
                BinaryPhase::DenoiseNegative => s.hp.step(b.grad(Role::ChannelPos).expect("h' gradient")),
            }
            s.count += 1;
            steps += 1;
        }
        Ok(mean(total, steps))
    })?;
    let mut out = Trained::from_target(report, best.f.model);
    out.auxiliary = Some(best.g.model);
    out.h = Some(best.h.model);
    out.h_prime = Some(best.hp.model);
    Ok(out)
}

#[derive(Clone)]
struct DecaPState {
    f: Slot,
    h: Slot,
    hp: Slot,
    count: usize,
}

/// Pre-trained routine: a frozen prior (seed s1) trained with
/// cross-entropy, then f re-initialised with seed s2 and trained with the
/// channel models against the prior.
pub fn train_deca_p(task: &dyn Task, spec: &ModelSpec, cfg: &DecaConfig) -> Result<Trained> {
    cfg.validate()?;
    require_binary(task)?;
    task.check_target(spec)?;
    let prior_run = pretrain_prior(task, spec, cfg)?;
    let prior = prior_run.target;
    let (h_spec, hp_spec) = channel_specs(task, spec, cfg.seed_aux);
    let state = DecaPState {
        f: Slot::new(&spec.clone().with_seed(cfg.seed_aux), cfg)?,
        h: Slot::new(&h_spec, cfg)?,
        hp: Slot::new(&hp_spec, cfg)?,
        count: 0,
    };
    let batch = minibatch_len(task, cfg);
    let report = RunReport::new("deca-p", task.mode().name(), cfg);
    let (best, mut report) = drive(task, cfg, report, state, |s| &s.f.model, |s, epoch| {
        let items = task.epoch_items(None, cfg.seed_aux, epoch)?;
        let (mut total, mut steps) = (0.0, 0);
        for chunk in items.chunks(batch) {
            let phase = BinaryPhase::at(s.count);
            let labeled = task.labeled(chunk);
            let mut b = deca_p_loss(&s.f.model, &prior, &s.h.model, &s.hp.model, &labeled, cfg, phase)?;
            total += finish_step(&mut b, &mut s.f, cfg, epoch, s.count)?;
            match phase {
                BinaryPhase::DenoisePositive => s.h.step(b.grad(Role::ChannelNeg).expect("h gradient")),
                BinaryPhase::DenoiseNegative => s.hp.step(b.grad(Role::ChannelPos).expect("h' gradient")),
            }
            s.count += 1;
            steps += 1;
        }
        Ok(mean(total, steps))
    })?;
    report.audit = serde_json::json!({ "prior_valid": prior_run.report.valid, "prior_test": prior_run.report.test });
    report.wall_clock_secs += prior_run.report.wall_clock_secs;
    let mut out = Trained::from_target(report, best.f.model);
    out.prior = Some(prior);
    out.h = Some(best.h.model);
    out.h_prime = Some(best.hp.model);
    Ok(out)
}

#[derive(Clone)]
struct MultiState {
    f: Slot,
    h: Slot,
    count: usize,
}

/// Multi-class pre-trained routine. Step `count` focuses on class
/// `count mod |C|`; epochs before `phase1_epochs` use the substituted
/// objective, later ones the stop-gradient objective (never, when
/// `phase1_epochs` is unset).
pub fn train_deca_p_multiclass(task: &dyn Task, spec: &ModelSpec, cfg: &DecaConfig) -> Result<Trained> {
    cfg.validate()?;
    if task.mode() != TaskMode::MultiClass {
        return Err(Error::Config("the multi-class routine needs a multi-class task".into()));
    }
    task.check_target(spec)?;
    let prior_run = pretrain_prior(task, spec, cfg)?;
    let prior = prior_run.target;
    let f = Slot::new(&spec.clone().with_seed(cfg.seed_aux), cfg)?;
    let classes = spec.num_classes;
    let h_spec = ModelSpec::h_multiclass(f.model.embedding_dim(), classes)
        .with_seed(mix(cfg.seed_aux, tag::CHANNEL))
        .with_init_scale(spec.init_scale);
    let state = MultiState { h: Slot::new(&h_spec, cfg)?, f, count: 0 };
    let batch = minibatch_len(task, cfg);
    let report = RunReport::new("deca-p", task.mode().name(), cfg);
    let (best, mut report) = drive(task, cfg, report, state, |s| &s.f.model, |s, epoch| {
        let items = task.epoch_items(None, cfg.seed_aux, epoch)?;
        let phase = if cfg.phase2_active(epoch) { MultiPhase::StopGradient } else { MultiPhase::Substituted };
        let (mut total, mut steps) = (0.0, 0);
        for chunk in items.chunks(batch) {
            let k = focus_class(s.count, classes);
            let examples = task.class_examples(chunk);
            let mut b = deca_p_multiclass_loss(&s.f.model, &prior, &s.h.model, &examples, cfg, k, phase)?;
            total += finish_step(&mut b, &mut s.f, cfg, epoch, s.count)?;
            s.h.step(b.grad(Role::Channel).expect("channel gradient"));
            s.count += 1;
            steps += 1;
        }
        Ok(mean(total, steps))
    })?;
    report.audit = serde_json::json!({ "prior_valid": prior_run.report.valid, "prior_test": prior_run.report.test });
    report.wall_clock_secs += prior_run.report.wall_clock_secs;
    let mut out = Trained::from_target(report, best.f.model);
    out.prior = Some(prior);
    out.h_multi = Some(best.h.model);
    Ok(out)
}
