use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::config::{expand_grid, scalar_text, Cell, DatasetSource, ExperimentConfig, Loaded, TrainerKind};
use crate::data::{split, ImplicitDataset, MultiClassDataset};
use crate::error::{Error, Result};
use crate::model::{Input, ModelSpec, Predictor};
use crate::par;
use crate::train::{
    train_deca, train_deca_p, train_deca_p_multiclass, train_ensemble, train_itlm, train_normal, train_tce,
    ClassificationTask, RankingTask, RunReport, Sample, Task, TaskMode, TrainItem, Trained,
};

/// A task built for one run seed, together with the data it came from.
#[allow(clippy::large_enum_variant)]
pub enum Prepared {
    Ranking { task: RankingTask, full: ImplicitDataset },
    Classes(ClassificationTask),
}

impl Prepared {
    /// Loads the data and splits it with `seed`.
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let shift = if cfg.resample_data { seed } else { 0 };
        match (cfg.dataset.load(shift)?, cfg.task) {
            (Loaded::Implicit(full), TaskMode::BinaryRanking) => {
                let splits = split(&full, &cfg.split, seed)?;
                let task = RankingTask::new(splits, cfg.ks.clone(), cfg.negatives)?;
                Ok(Self::Ranking { task, full })
            }
            (Loaded::Classes(data), mode @ (TaskMode::BinaryGeneric | TaskMode::MultiClass)) => {
                let split = data.split_random(cfg.class_split, seed)?;
                Ok(Self::Classes(ClassificationTask::new(split, mode == TaskMode::BinaryGeneric)?))
            }
            (_, mode) => Err(Error::Config(format!("dataset does not fit task {}", mode.name()))),
        }
    }

    pub fn task(&self) -> &dyn Task {
        match self {
            Self::Ranking { task, .. } => task,
            Self::Classes(task) => task,
        }
    }
}

/// Delegates to a task but substitutes configured auxiliary and channel specs.
struct WithRoles<'a> {
    inner: &'a dyn Task,
    auxiliary: Option<&'a ModelSpec>,
    channel: Option<&'a ModelSpec>,
}

impl Task for WithRoles<'_> {
    fn mode(&self) -> TaskMode {
        self.inner.mode()
    }
    fn num_keys(&self) -> usize {
        self.inner.num_keys()
    }
    fn is_noisy(&self, key: usize) -> bool {
        self.inner.is_noisy(key)
    }
    fn key_items(&self, keys: &[usize]) -> Vec<TrainItem> {
        self.inner.key_items(keys)
    }
    fn epoch_items(&self, keys: Option<&[usize]>, seed: u64, epoch: usize) -> Result<Vec<TrainItem>> {
        self.inner.epoch_items(keys, seed, epoch)
    }
    fn items_per_instance(&self) -> usize {
        self.inner.items_per_instance()
    }
    fn input(&self, sample: Sample) -> Input<'_> {
        self.inner.input(sample)
    }
    fn valid_metrics(&self, model: &dyn Predictor) -> Result<BTreeMap<String, f64>> {
        self.inner.valid_metrics(model)
    }
    fn test_metrics(&self, model: &dyn Predictor) -> Result<BTreeMap<String, f64>> {
        self.inner.test_metrics(model)
    }
    fn early_stop_metric(&self) -> String {
        self.inner.early_stop_metric()
    }
    fn aux_spec(&self, target: &ModelSpec) -> ModelSpec {
        self.auxiliary.cloned().unwrap_or_else(|| self.inner.aux_spec(target))
    }
    fn channel_spec(&self, target: &ModelSpec) -> ModelSpec {
        self.channel.cloned().unwrap_or_else(|| self.inner.channel_spec(target))
    }
    fn check_target(&self, spec: &ModelSpec) -> Result<()> {
        self.inner.check_target(spec)
    }
}

/// Trains `cfg.trainer` once on a prepared task with target seed `seed`.
pub fn train_with(cfg: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<Trained> {
    let task = WithRoles { inner: prepared.task(), auxiliary: cfg.auxiliary.as_ref(), channel: cfg.channel.as_ref() };
    let run = cfg.run_config(seed);
    let spec = &cfg.model;
    let mut trained = match cfg.trainer {
        TrainerKind::Normal => train_normal(&task, spec, &run),
        TrainerKind::Deca => train_deca(&task, spec, &run),
        TrainerKind::DecaP if cfg.task == TaskMode::MultiClass => train_deca_p_multiclass(&task, spec, &run),
        TrainerKind::DecaP => train_deca_p(&task, spec, &run),
        TrainerKind::Tce => train_tce(&task, spec, &run, cfg.tce),
        TrainerKind::Itlm => train_itlm(&task, spec, &run, cfg.itlm.keep_fraction, cfg.itlm.rounds),
        TrainerKind::Ensemble => train_ensemble(&task, spec, &run),
    }?;
    trained.report.dataset_id = cfg.dataset_id();
    trained.report.config_hash = cfg.hash();
    Ok(trained)
}

/// Prepares the data for `seed` and trains once.
pub fn train_run(cfg: &ExperimentConfig, seed: u64) -> Result<Trained> {
    train_with(cfg, &Prepared::new(cfg, seed)?, seed)
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub id: String,
    pub cell: usize,
    pub label: String,
    pub seed: u64,
    pub report: RunReport,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub out_dir: PathBuf,
    pub runs: Vec<RunRecord>,
    /// Run ids that failed, with the error text.
    pub failures: Vec<(String, String)>,
}

impl ExperimentOutput {
    pub fn report_paths(&self) -> Vec<PathBuf> {
        self.runs.iter().map(|r| report_path(&self.out_dir, &r.id)).collect()
    }
}

fn report_path(out: &Path, id: &str) -> PathBuf {
    out.join("runs").join(format!("{id}.json"))
}

/// Splits `recall@20` into (`recall`, `20`); plain names get an empty K.
pub fn split_metric(name: &str) -> (&str, &str) {
    name.split_once('@').unwrap_or((name, ""))
}

/// Applies `--seed-override` to a raw config document.
pub fn override_seed(raw: &mut Value, seed: Option<u64>) {
    if let Some(s) = seed {
        raw["seeds"] = Value::from(vec![s]);
    }
}

/// Runs `f` on a pool of `workers` threads (the global pool when `None`).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        return Ok(pool.install(f));
    }
    let _ = workers;
    Ok(f())
}

pub fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(err) => Error::io(path, err),
        other => Error::Data(format!("csv {}: {other:?}", path.display())),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows `(metric, K, split, value)` of a report's final metrics.
pub fn metric_rows(report: &RunReport) -> Vec<(String, String, &'static str, f64)> {
    let mut rows = Vec::new();
    for (split_name, map) in [("valid", &report.valid), ("test", &report.test)] {
        for (name, v) in map {
            let (m, k) = split_metric(name);
            rows.push((m.to_string(), k.to_string(), split_name, *v));
        }
    }
    rows
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 })
}

/// Rows `(x, series, y)`: the median test metric over seeds per cell. `x`
/// is the first grid coordinate other than the trainer; the remaining
/// coordinates and the metric name form the series.
pub fn plot_rows(cells: &[Cell], runs: &[RunRecord]) -> Vec<(String, String, f64)> {
    let mut rows = Vec::new();
    for cell in cells {
        let x_pos = cell.coords.iter().position(|(k, _)| k != "trainer");
        let x = x_pos.map(|i| scalar_text(&cell.coords[i].1)).unwrap_or_else(|| cell.label());
        let mut series: Vec<String> = vec![cell.config.trainer.name().to_string()];
        series.extend(
            cell.coords
                .iter()
                .enumerate()
                .filter(|(i, (k, _))| Some(*i) != x_pos && k != "trainer")
                .map(|(_, (k, v))| format!("{k}={}", scalar_text(v))),
        );
        let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.cell == cell.index).collect();
        let metrics: std::collections::BTreeSet<&String> = mine.iter().flat_map(|r| r.report.test.keys()).collect();
        for m in metrics {
            let mut vals: Vec<f64> = mine.iter().filter_map(|r| r.report.test.get(m).copied()).collect();
            if let Some(y) = median(&mut vals) {
                rows.push((x.clone(), format!("{} {m}", series.join(" ")), y));
            }
        }
    }
    rows
}

/// Writes the JSON report and the per-run CSVs of one run.
pub fn write_run(out: &Path, id: &str, report: &RunReport) -> Result<()> {
    let runs = out.join("runs");
    std::fs::create_dir_all(&runs).map_err(|e| Error::io(&runs, e))?;
    report.save(&report_path(out, id))?;
    write_csv(&runs.join(format!("{id}.epochs.csv")), &["epoch", "split", "metric", "value"], report.epoch_rows())?;
    write_csv(&runs.join(format!("{id}.metrics.csv")), &["metric", "K", "split", "value"], metric_rows(report))
}

/// Expands the grid, runs every (cell, seed) pair on up to `workers`
/// threads and writes reports, metric CSVs and plot data under `out`.
///
/// Invalid configs fail before any training. Failed runs are listed in the
/// output; the other runs are still written.
pub fn run_experiment(raw: &Value, out: &Path, workers: Option<usize>) -> Result<ExperimentOutput> {
    let cells = expand_grid(raw)?;
    let jobs: Vec<(&Cell, u64)> = cells.iter().flat_map(|c| c.config.seeds.iter().map(move |&s| (c, s))).collect();
    let results = with_workers(workers, || {
        par::map(&jobs, |&(cell, seed)| {
            let id = format!("c{:03}-{}-s{seed}", cell.index, cell.config.trainer.name());
            log::info!("run {id} [{}]", cell.label());
            (id, train_run(&cell.config, seed).map(|t| t.report))
        })
    })?;

    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for ((cell, seed), (id, result)) in jobs.iter().zip(results) {
        match result {
            Ok(report) => {
                write_run(out, &id, &report)?;
                runs.push(RunRecord { id, cell: cell.index, label: cell.label(), seed: *seed, report });
            }
            Err(e) => {
                log::error!("run {id} failed: {e}");
                failures.push((id, e.to_string()));
            }
        }
    }

    let mut summary = Vec::new();
    for r in &runs {
        for (m, k, s, v) in metric_rows(&r.report) {
            summary.push((r.id.clone(), r.cell, r.report.trainer.clone(), r.seed, m, k, s, v));
        }
    }
    write_csv(
        &out.join("metrics.csv"),
        &["run", "cell", "trainer", "seed", "metric", "K", "split", "value"],
        summary,
    )?;
    write_csv(&out.join("plot.csv"), &["x", "series", "y"], plot_rows(&cells, &runs))?;
    let index: Vec<Value> = cells
        .iter()
        .map(|c| serde_json::json!({"cell": c.index, "label": c.label(), "config_hash": c.config.hash(), "config": c.config}))
        .collect();
    let path = out.join("cells.json");
    std::fs::write(&path, serde_json::to_string_pretty(&index)?).map_err(|e| Error::io(&path, e))?;
    Ok(ExperimentOutput { out_dir: out.to_path_buf(), runs, failures })
}

/// Generates (or loads) the dataset of a config and writes it as JSON.
pub fn generate_data(cfg: &ExperimentConfig, seed_shift: u64, path: &Path) -> Result<String> {
    let summary = match cfg.dataset.load(seed_shift)? {
        Loaded::Implicit(ds) => {
            ds.save(path)?;
            let noisy = ds.true_labels.iter().filter(|&&l| l == 0).count();
            format!("{} users, {} items, {} interactions, {noisy} noisy", ds.num_users, ds.num_items, ds.len())
        }
        Loaded::Classes(ds) => {
            ds.save(path)?;
            format!("{} rows, {} classes, dim {}, noise {:.4}", ds.len(), ds.num_classes, ds.dim, ds.measured_noise())
        }
    };
    Ok(summary)
}

/// Whether a dataset source is generated (and so honours a seed shift).
pub fn is_generated(source: &DatasetSource) -> bool {
    matches!(source, DatasetSource::Planted(_) | DatasetSource::Blobs(_))
}

pub(crate) fn classification_train(prepared: &Prepared) -> Option<&MultiClassDataset> {
    match prepared {
        Prepared::Classes(t) => Some(&t.split.train),
        Prepared::Ranking { .. } => None,
    }
}
