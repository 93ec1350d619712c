//! Normal training, T-CE, ITLM and the two-seed ensemble.

use serde::{Deserialize, Serialize};

use super::{
    add_l2, drive, ensure_finite, mean, minibatch_len, Adam, Audit, ItlmRound, RunReport, Task, TaskMode,
    TceEpoch, TrainItem, Trained,
};
use crate::error::{Error, Result};
use crate::loss::{bce_loss, bce_per_example, cross_entropy_loss, cross_entropy_per_example, DecaConfig, Role};
use crate::model::{build_model, Input, Model, ModelSpec, Predictor};

/// Linear ramp of the T-CE drop rate: `delta(t) = delta_max * min(1, t / warmup)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TceSchedule {
    pub delta_max: f64,
    pub warmup_epochs: usize,
}

impl TceSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.delta_max) {
            return Err(Error::Config(format!("delta_max = {} must lie in [0, 1)", self.delta_max)));
        }
        Ok(())
    }

    pub fn delta(&self, epoch: usize) -> f64 {
        if self.warmup_epochs == 0 {
            self.delta_max
        } else {
            self.delta_max * (epoch as f64 / self.warmup_epochs as f64).min(1.0)
        }
    }
}

/// Indices of the `floor(delta * n)` highest-loss candidates, where `n` is
/// the number of candidates. Ties go to the lower index. Sorted ascending.
pub fn tce_drop(losses: &[f64], candidate: &[bool], delta: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..losses.len()).filter(|&i| candidate[i]).collect();
    let n_drop = (delta * idx.len() as f64).floor() as usize;
    idx.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]).then(a.cmp(&b)));
    let mut out = idx[..n_drop].to_vec();
    out.sort_unstable();
    out
}

fn supervised_step(task: &dyn Task, model: &Model, items: &[TrainItem], weights: Option<&[f64]>, eps: f64) -> Result<crate::loss::LossBundle> {
    if task.mode().is_binary() {
        bce_loss(model, &task.labeled(items), weights, eps)
    } else {
        cross_entropy_loss(model, &task.class_examples(items), weights, eps)
    }
}

fn per_example(task: &dyn Task, model: &Model, items: &[TrainItem], eps: f64) -> Vec<f64> {
    if task.mode().is_binary() {
        bce_per_example(model, &task.labeled(items), eps)
    } else {
        cross_entropy_per_example(model, &task.class_examples(items), eps)
    }
}

#[derive(Clone)]
struct SupState {
    model: Model,
    opt: Adam,
    count: usize,
}

/// Cross-entropy training over `keys` (all when `None`), optionally dropping
/// large-loss positives.
fn supervised_run(
    task: &dyn Task,
    spec: &ModelSpec,
    cfg: &DecaConfig,
    keys: Option<&[usize]>,
    tce: Option<TceSchedule>,
    name: &str,
) -> Result<Trained> {
    cfg.validate()?;
    task.check_target(spec)?;
    let model = build_model(&spec.clone().with_seed(cfg.seed))?;
    let opt = Adam::new(model.num_params(), cfg.learn_rate);
    let state = SupState { model, opt, count: 0 };
    let report = RunReport::new(name, task.mode().name(), cfg);
    let batch = minibatch_len(task, cfg);
    let mut audit: Vec<TceEpoch> = Vec::new();
    let (best, mut report) = drive(task, cfg, report, state, |s| &s.model, |s, epoch| {
        let items = task.epoch_items(keys, cfg.seed, epoch)?;
        let (mut total, mut steps) = (0.0, 0);
        let mut record = TceEpoch { epoch, delta: 0.0, dropped: 0, dropped_noisy: 0 };
        for chunk in items.chunks(batch) {
            let weights = match tce {
                Some(sched) => {
                    record.delta = sched.delta(epoch);
                    let losses = per_example(task, &s.model, chunk, cfg.prob_clamp);
                    let candidate: Vec<bool> = chunk.iter().map(|it| it.label == 1 && it.key.is_some()).collect();
                    let drop = tce_drop(&losses, &candidate, record.delta);
                    record.dropped += drop.len();
                    record.dropped_noisy +=
                        drop.iter().filter(|&&i| task.is_noisy(chunk[i].key.expect("candidate"))).count();
                    if drop.is_empty() {
                        None
                    } else {
                        let mut w = vec![1.0; chunk.len()];
                        for i in drop {
                            w[i] = 0.0;
                        }
                        Some(w)
                    }
                }
                None => None,
            };
            let mut bundle = supervised_step(task, &s.model, chunk, weights.as_deref(), cfg.prob_clamp)?;
            let mut grad = bundle.grads.remove(&Role::Target).expect("target gradient");
            bundle.value += add_l2(&s.model, &mut grad, cfg.reg_weight);
            bundle.grads.insert(Role::Target, grad);
            ensure_finite(&bundle, epoch, s.count)?;
            s.opt.step(s.model.params_mut(), bundle.grad(Role::Target).expect("target gradient"));
            total += bundle.value;
            steps += 1;
            s.count += 1;
        }
        if tce.is_some() {
            audit.push(record);
        }
        Ok(mean(total, steps))
    })?;
    let mut out = Trained::from_target(report.clone(), best.model);
    if tce.is_some() {
        // Only epochs that ran before the returned snapshot matter for the
        // report, but the full trace is kept for auditing.
        report.audit = serde_json::to_value(&audit)?;
        out.report = report;
        out.audit = Audit::Tce(audit);
    }
    Ok(out)
}

/// Plain cross-entropy training with seed `cfg.seed`.
pub fn train_normal(task: &dyn Task, spec: &ModelSpec, cfg: &DecaConfig) -> Result<Trained> {
    supervised_run(task, spec, cfg, None, None, "normal")
}

/// Trains the structural twin used as the frozen prior: the same run as
/// [`train_normal`] (seed `s1`). Rejects `s1 == s2`.
pub fn pretrain_prior(task: &dyn Task, spec: &ModelSpec, cfg: &DecaConfig) -> Result<Trained> {
    supervised_run(task, spec, cfg, None, None, "prior")
}

/// Truncated cross-entropy: per minibatch, the `floor(delta(t) * n_pos)`
/// positives with the largest loss get weight 0.
pub fn train_tce(task: &dyn Task, spec: &ModelSpec, cfg: &DecaConfig, schedule: TceSchedule) -> Result<Trained> {
    schedule.validate()?;
    if !task.mode().is_binary() {
        return Err(Error::Config("T-CE needs a binary task".into()));
    }
    supervised_run(task, spec, cfg, None, Some(schedule), "tce")
}

/// Iterative trimmed loss minimisation: train, keep the
/// `floor(keep_fraction * N)` lowest-loss training examples, retrain from
/// the initial seed on them; `rounds` times.
pub fn train_itlm(
    task: &dyn Task,
    spec: &ModelSpec,
    cfg: &DecaConfig,
    keep_fraction: f64,
    rounds: usize,
) -> Result<Trained> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Config(format!("keep_fraction = {keep_fraction} must lie in (0, 1]")));
    }
    let n = task.num_keys();
    let all: Vec<usize> = (0..n).collect();
    let overall = all.iter().filter(|&&k| task.is_noisy(k)).count() as f64 / n.max(1) as f64;
    let mut current = supervised_run(task, spec, cfg, None, None, "itlm")?;
    let mut log = Vec::new();
    for round in 1..=rounds {
        let losses = per_example(task, &current.target, &task.key_items(&all), cfg.prob_clamp);
        let n_keep = (keep_fraction * n as f64).floor() as usize;
        if n_keep == 0 {
            return Err(Error::Config(format!("keep_fraction = {keep_fraction} keeps no examples out of {n}")));
        }
        let mut order = all.clone();
        order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
        let mut kept = order[..n_keep].to_vec();
        kept.sort_unstable();
        if task.mode() == TaskMode::MultiClass || task.mode() == TaskMode::BinaryGeneric {
            let labels: std::collections::BTreeSet<usize> =
                task.key_items(&kept).iter().map(|it| it.label).collect();
            let all_labels: std::collections::BTreeSet<usize> =
                task.key_items(&all).iter().map(|it| it.label).collect();
            if labels.len() < all_labels.len() {
                log::warn!("ITLM round {round} keeps {} of {} classes", labels.len(), all_labels.len());
            }
        }
        let kept_noise = kept.iter().filter(|&&k| task.is_noisy(k)).count() as f64 / kept.len() as f64;
        log::info!("ITLM round {round}: kept {n_keep}/{n}, noise {kept_noise:.3} (overall {overall:.3})");
        current = supervised_run(task, spec, cfg, Some(&kept), None, "itlm")?;
        log.push(ItlmRound { round, kept, losses, kept_noise_rate: kept_noise, overall_noise_rate: overall });
    }
    let summary: Vec<serde_json::Value> = log
        .iter()
        .map(|r| {
            serde_json::json!({
                "round": r.round,
                "kept": r.kept.len(),
                "kept_noise_rate": r.kept_noise_rate,
                "overall_noise_rate": r.overall_noise_rate,
            })
        })
        .collect();
    current.report.audit = serde_json::Value::Array(summary);
    current.audit = Audit::Itlm(log);
    Ok(current)
}

/// Mean of the members' output probabilities, renormalised for simplexes.
#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<Model>,
}

fn same_structure(a: &ModelSpec, b: &ModelSpec) -> bool {
    ModelSpec { seed: 0, init_scale: 0.0, ..a.clone() } == ModelSpec { seed: 0, init_scale: 0.0, ..b.clone() }
}

impl Ensemble {
    pub fn new(members: Vec<Model>) -> Result<Self> {
        let first = members.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        if members.iter().any(|m| !same_structure(m.spec(), first.spec())) {
            return Err(Error::InvalidArgument("ensemble members differ in structure".into()));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Model] {
        &self.members
    }
}

impl Predictor for Ensemble {
    fn num_outputs(&self) -> usize {
        self.members[0].num_outputs()
    }

    fn predict(&self, x: &Input) -> Vec<f64> {
        let k = self.num_outputs();
        let mut out = vec![0.0; k];
        for m in &self.members {
            for (o, p) in out.iter_mut().zip(m.forward(x)) {
                *o += p;
            }
        }
        let n = self.members.len() as f64;
        for o in &mut out {
            *o /= n;
        }
        if k > 1 {
            let s: f64 = out.iter().sum();
            for o in &mut out {
                *o /= s;
            }
        }
        out
    }
}

/// Averaged predictions of two structurally identical models.
pub fn ensemble_predict(a: &Model, b: &Model, inputs: &[Input]) -> Result<Vec<Vec<f64>>> {
    let e = Ensemble::new(vec![a.clone(), b.clone()])?;
    Ok(crate::par::map(inputs, |x| e.predict(x)))
}

/// Two normal runs with seeds `s1` and `s2`, evaluated as an ensemble.
pub fn train_ensemble(task: &dyn Task, spec: &ModelSpec, cfg: &DecaConfig) -> Result<Trained> {
    let a = supervised_run(task, spec, cfg, None, None, "ensemble")?;
    let cfg_b = DecaConfig { seed: cfg.seed_aux, seed_aux: cfg.seed, ..cfg.clone() };
    let b = supervised_run(task, spec, &cfg_b, None, None, "ensemble")?;
    let ens = Ensemble::new(vec![a.target.clone(), b.target.clone()])?;
    let mut report = a.report.clone();
    report.config = cfg.clone();
    report.seeds = [cfg.seed, cfg.seed_aux];
    report.valid = task.valid_metrics(&ens)?;
    report.test = task.test_metrics(&ens)?;
    report.wall_clock_secs += b.report.wall_clock_secs;
    report.audit = serde_json::json!({ "member_test": [a.report.test, b.report.test] });
    let mut out = Trained::from_target(report, a.target);
    out.partner = Some(b.target);
    Ok(out)
}
