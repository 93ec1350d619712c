//! `deca`: generate data, train, sweep, compare and run the diagnostic
//! studies from a JSON experiment config.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use deca::experiment::{
    collect_reports, compare_runs, diagnose_disagreement, expand_grid, generate_data, is_generated, override_seed,
    rating_plot_rows, rating_study, read_config, run_experiment, with_workers, write_csv, write_json,
    ExperimentConfig, ExperimentOutput,
};

#[derive(Parser)]
#[command(name = "deca", version, about = "Noisy-label denoising experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `out_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for grid cells.
    #[arg(long)]
    workers: Option<usize>,
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or load) the config's dataset and write it as JSON.
    GenData(Common),
    /// Run a config without grid axes.
    Train(Common),
    /// Run every cell of a grid config.
    Sweep(Common),
    /// Compare two trainers' reports by median over seeds.
    Compare {
        /// Report files or run directories.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "normal")]
        baseline: String,
        #[arg(long, default_value = "deca-p")]
        challenger: String,
        /// Also write the table as CSV into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train two seeds per repetition and compare their predictions on
    /// clean and noisy training examples.
    DiagnoseDisagreement(Common),
    /// Mean real-positive probability per rating bucket.
    RatingStudy(Common),
}

struct Loaded {
    raw: Value,
    out: PathBuf,
    workers: Option<usize>,
}

fn load(common: &Common) -> Result<Loaded> {
    let mut raw = read_config(&common.config).with_context(|| format!("reading {}", common.config.display()))?;
    override_seed(&mut raw, common.seed_override);
    let from_config = raw.get("out_dir").and_then(Value::as_str).map(PathBuf::from);
    let out = common.out.clone().or(from_config).unwrap_or_else(|| PathBuf::from("out"));
    if common.workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    Ok(Loaded { raw, out, workers: common.workers })
}

/// The single config of a document without grid axes.
fn single(raw: &Value) -> Result<ExperimentConfig> {
    let mut cells = expand_grid(raw)?;
    if cells.len() != 1 {
        bail!("config expands to {} cells; use `sweep`", cells.len());
    }
    Ok(cells.remove(0).config)
}

fn summarize(out: &ExperimentOutput) -> Result<()> {
    for run in &out.runs {
        let metrics: Vec<String> = run.report.test.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
        println!("{} [{}] best epoch {}: {}", run.id, run.label, run.report.best_epoch, metrics.join(" "));
    }
    println!("wrote {} runs to {}", out.runs.len(), out.out_dir.display());
    if !out.failures.is_empty() {
        for (id, err) in &out.failures {
            eprintln!("run {id} failed: {err}");
        }
        bail!("{} of {} runs failed", out.failures.len(), out.failures.len() + out.runs.len());
    }
    Ok(())
}

fn report_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for p in inputs {
        if p.is_dir() {
            paths.extend(collect_reports(p)?);
        } else {
            paths.push(p.clone());
        }
    }
    if paths.is_empty() {
        bail!("no report files found");
    }
    Ok(paths)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(common) => {
            let l = load(&common)?;
            let cfg = single(&l.raw)?;
            ensure_dir(&l.out)?;
            let seeds = if is_generated(&cfg.dataset) && cfg.resample_data { cfg.seeds.clone() } else { vec![0] };
            for s in seeds {
                let path = l.out.join(if s == 0 { "dataset.json".to_string() } else { format!("dataset-s{s}.json") });
                let summary = generate_data(&cfg, s, &path)?;
                println!("{}: {summary}", path.display());
            }
        }
        Command::Train(common) => {
            let l = load(&common)?;
            single(&l.raw)?;
            summarize(&run_experiment(&l.raw, &l.out, l.workers)?)?;
        }
        Command::Sweep(common) => {
            let l = load(&common)?;
            let out = run_experiment(&l.raw, &l.out, l.workers)?;
            summarize(&out)?;
            println!("plot data: {}", l.out.join("plot.csv").display());
        }
        Command::Compare { reports, baseline, challenger, out } => {
            let cmp = compare_runs(&report_paths(&reports)?, &baseline, &challenger)?;
            print!("{cmp}");
            if let Some(dir) = out {
                ensure_dir(&dir)?;
                write_csv(
                    &dir.join("comparison.csv"),
                    &["metric", "K", "split", "baseline", "challenger", "delta", "winner"],
                    cmp.csv_rows(),
                )?;
                write_json(&dir.join("comparison.json"), &cmp)?;
            }
        }
        Command::DiagnoseDisagreement(common) => {
            let l = load(&common)?;
            let cfg = single(&l.raw)?;
            let study = with_workers(l.workers, || diagnose_disagreement(&cfg))??;
            ensure_dir(&l.out)?;
            write_json(&l.out.join("disagreement.json"), &study)?;
            write_csv(&l.out.join("plot.csv"), &["x", "series", "y"], study.plot_rows())?;
            for r in &study.runs {
                let rep = &r.report;
                println!(
                    "seeds {}/{}: difference clean {:.4} noisy {:.4}; agreement clean {:.4} noisy {:.4}",
                    r.seed_a, r.seed_b, rep.mean_diff_clean, rep.mean_diff_noisy, rep.agreement_clean, rep.agreement_noisy
                );
            }
            println!("noisy above clean in {}/{} repetitions", study.noisy_above_clean, study.runs.len());
        }
        Command::RatingStudy(common) => {
            let l = load(&common)?;
            let cfg = single(&l.raw)?;
            let runs = with_workers(l.workers, || rating_study(&cfg))??;
            ensure_dir(&l.out)?;
            write_json(&l.out.join("rating_study.json"), &runs)?;
            write_csv(&l.out.join("plot.csv"), &["x", "series", "y"], rating_plot_rows(&runs))?;
            for r in &runs {
                let buckets: Vec<String> = r.study.buckets.iter().map(|(k, b)| format!("{k}:{:.4}", b.mean)).collect();
                println!("seed {}: {} spearman {:?}", r.seed, buckets.join(" "), r.study.spearman);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
