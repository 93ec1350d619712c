//! Training routines: the alternating denoising loops and the baselines.
//!
//! Every trainer evaluates the target on the validation split after each
//! epoch, keeps the best snapshot, stops after `patience` epochs without
//! improvement, and scores the snapshot on the test split.

mod adam;
mod baselines;
mod deca;
mod report;
mod task;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use baselines::{
    ensemble_predict, pretrain_prior, tce_drop, train_ensemble, train_itlm, train_normal, train_tce, Ensemble,
    TceSchedule,
};
pub use deca::{focus_class, train_deca, train_deca_p, train_deca_p_multiclass};
pub use report::{EpochRecord, RunReport, REPORT_SCHEMA_VERSION};
pub use task::{ClassificationTask, RankingTask, Sample, Task, TaskMode, TrainItem};

use crate::error::{Error, Result};
use crate::loss::{DecaConfig, LossBundle};
use crate::model::{Model, Predictor};

/// T-CE bookkeeping for one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TceEpoch {
    pub epoch: usize,
    pub delta: f64,
    pub dropped: usize,
    /// Dropped examples whose observed label is wrong.
    pub dropped_noisy: usize,
}

/// ITLM bookkeeping for one selection round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItlmRound {
    pub round: usize,
    /// Kept keys in ascending order.
    pub kept: Vec<usize>,
    /// Loss of every key under the model that made the selection.
    pub losses: Vec<f64>,
    pub kept_noise_rate: f64,
    pub overall_noise_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Audit {
    #[default]
    None,
    Tce(Vec<TceEpoch>),
    Itlm(Vec<ItlmRound>),
}

/// A finished run: the report and the trained models.
#[derive(Debug, Clone)]
pub struct Trained {
    pub report: RunReport,
    pub target: Model,
    /// Co-trained g (DeCA).
    pub auxiliary: Option<Model>,
    /// Frozen pre-trained twin (DeCA(p)).
    pub prior: Option<Model>,
    pub h: Option<Model>,
    pub h_prime: Option<Model>,
    pub h_multi: Option<Model>,
    /// Second ensemble member.
    pub partner: Option<Model>,
    pub audit: Audit,
}

impl Trained {
    fn from_target(report: RunReport, target: Model) -> Self {
        Self {
            report,
            target,
            auxiliary: None,
            prior: None,
            h: None,
            h_prime: None,
            h_multi: None,
            partner: None,
            audit: Audit::None,
        }
    }

    /// The predictor the report was scored with.
    pub fn predictor(&self) -> Box<dyn Predictor> {
        match &self.partner {
            Some(b) => Box::new(Ensemble::new(vec![self.target.clone(), b.clone()]).expect("validated at training")),
            None => Box::new(self.target.clone()),
        }
    }
}

/// Fails with a divergence diagnostic on a non-finite loss or gradient.
fn ensure_finite(bundle: &LossBundle, epoch: usize, step: usize) -> Result<()> {
    if bundle.is_finite() {
        Ok(())
    } else {
        log::error!("non-finite loss {} at epoch {epoch}, step {step}", bundle.value);
        Err(Error::Diverged { epoch, step, loss: bundle.value })
    }
}

/// Adds `lambda * ||theta||^2` to the loss and its gradient.
fn add_l2(model: &Model, grad: &mut [f64], lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    for (g, p) in grad.iter_mut().zip(model.params()) {
        *g += 2.0 * lambda * p;
    }
    lambda * model.squared_norm()
}

fn minibatch_len(task: &dyn Task, cfg: &DecaConfig) -> usize {
    cfg.batch_size * task.items_per_instance()
}

/// Runs `epoch_fn` under early stopping and returns the best snapshot of
/// `state` (by the task's validation metric) with the filled-in report.
fn drive<S: Clone>(
    task: &dyn Task,
    cfg: &DecaConfig,
    mut report: RunReport,
    mut state: S,
    target: impl Fn(&S) -> &Model,
    mut epoch_fn: impl FnMut(&mut S, usize) -> Result<f64>,
) -> Result<(S, RunReport)> {
    let started = Instant::now();
    let metric = task.early_stop_metric();
    let mut best: Option<(f64, usize, S, BTreeMap<String, f64>)> = None;
    let mut since_best = 0;
    for epoch in 0..cfg.epochs {
        let loss = epoch_fn(&mut state, epoch)?;
        let valid = task.valid_metrics(target(&state))?;
        let score = *valid
            .get(&metric)
            .ok_or_else(|| Error::Contract(format!("validation metric {metric} missing")))?;
        log::debug!("{} epoch {epoch}: loss {loss:.6}, {metric} {score:.4}", report.trainer);
        report.epochs.push(EpochRecord { epoch, train_loss: loss, valid: valid.clone() });
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, epoch, state.clone(), valid));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                report.stopped_early = true;
                break;
            }
        }
    }
    let (_, best_epoch, best_state, valid) = best.expect("at least one epoch");
    report.best_epoch = best_epoch;
    report.valid = valid;
    report.test = task.test_metrics(target(&best_state))?;
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok((best_state, report))
}

fn mean(total: f64, steps: usize) -> f64 {
    if steps == 0 {
        0.0
    } else {
        total / steps as f64
    }
}
