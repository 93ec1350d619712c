use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{median, split_metric};
use crate::error::{Error, Result};
use crate::train::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Winner {
    Baseline,
    Challenger,
    Tie,
    /// The metric is missing from at least one report.
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub split: String,
    pub baseline: Option<f64>,
    pub challenger: Option<f64>,
    pub delta: Option<f64>,
    pub winner: Winner,
    /// Reports (trainer and seed) lacking this metric.
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub challenger: String,
    pub dataset_id: String,
    pub baseline_runs: usize,
    pub challenger_runs: usize,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, metric: &str, split: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.metric == metric && r.split == split)
    }

    /// CSV rows `(metric, K, split, baseline, challenger, delta, winner)`.
    pub fn csv_rows(&self) -> Vec<[String; 7]> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
        self.rows
            .iter()
            .map(|r| {
                let (m, k) = split_metric(&r.metric);
                [
                    m.to_string(),
                    k.to_string(),
                    r.split.clone(),
                    opt(r.baseline),
                    opt(r.challenger),
                    opt(r.delta),
                    serde_json::to_value(r.winner).unwrap().as_str().unwrap().to_string(),
                ]
            })
            .collect()
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} ({} runs) vs {} ({} runs) on dataset {}",
            self.baseline, self.baseline_runs, self.challenger, self.challenger_runs, self.dataset_id
        )?;
        writeln!(f, "{:<14} {:<6} {:>10} {:>10} {:>10}  winner", "metric", "split", "baseline", "challenger", "delta")?;
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "--".into());
        for r in &self.rows {
            let mut winner = format!("{:?}", r.winner).to_lowercase();
            if !r.missing.is_empty() {
                winner.push_str(&format!(" (missing in {})", r.missing.join(", ")));
            }
            writeln!(
                f,
                "{:<14} {:<6} {:>10} {:>10} {:>10}  {winner}",
                r.metric,
                r.split,
                cell(r.baseline),
                cell(r.challenger),
                cell(r.delta)
            )?;
        }
        Ok(())
    }
}

/// Report files under `dir/runs` (or directly in `dir`), sorted by name.
pub fn collect_reports(dir: &Path) -> Result<Vec<PathBuf>> {
    let runs = dir.join("runs");
    let base = if runs.is_dir() { runs } else { dir.to_path_buf() };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&base).map_err(|e| Error::io(&base, e))? {
        let path = entry.map_err(|e| Error::io(&base, e))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Median-over-seeds comparison of two trainers' reports.
pub fn compare_reports(reports: &[RunReport], baseline: &str, challenger: &str) -> Result<Comparison> {
    let side = |id: &str| -> Vec<&RunReport> { reports.iter().filter(|r| r.trainer == id).collect() };
    let (base, chal) = (side(baseline), side(challenger));
    for (id, runs) in [(baseline, &base), (challenger, &chal)] {
        if runs.is_empty() {
            return Err(Error::Comparison(format!("no reports for trainer {id}")));
        }
    }
    let ids: BTreeSet<&str> = base.iter().chain(&chal).map(|r| r.dataset_id.as_str()).collect();
    if ids.len() != 1 {
        return Err(Error::Comparison(format!("reports cover different datasets: {ids:?}")));
    }
    let tasks: BTreeSet<&str> = base.iter().chain(&chal).map(|r| r.task.as_str()).collect();
    if tasks.len() != 1 {
        return Err(Error::Comparison(format!("reports cover different tasks: {tasks:?}")));
    }

    let mut rows = Vec::new();
    for split in ["valid", "test"] {
        let pick = |r: &RunReport| if split == "valid" { r.valid.clone() } else { r.test.clone() };
        let names: BTreeSet<String> = base.iter().chain(&chal).flat_map(|r| pick(r).into_keys()).collect();
        for name in names {
            let mut missing = Vec::new();
            let mut collect = |runs: &[&RunReport]| -> Vec<f64> {
                let mut vals = Vec::new();
                for r in runs {
                    match pick(r).get(&name) {
                        Some(v) => vals.push(*v),
                        None => missing.push(format!("{} seed {}", r.trainer, r.seeds[0])),
                    }
                }
                vals
            };
            let b = median(&mut collect(&base));
            let c = median(&mut collect(&chal));
            let delta = b.zip(c).map(|(b, c)| c - b);
            let winner = match delta {
                _ if !missing.is_empty() => Winner::Gap,
                None => Winner::Gap,
                Some(d) if d > 0.0 => Winner::Challenger,
                Some(d) if d < 0.0 => Winner::Baseline,
                Some(_) => Winner::Tie,
            };
            rows.push(ComparisonRow { metric: name, split: split.into(), baseline: b, challenger: c, delta, winner, missing });
        }
    }
    Ok(Comparison {
        baseline: baseline.into(),
        challenger: challenger.into(),
        dataset_id: ids.into_iter().next().unwrap_or_default().to_string(),
        baseline_runs: base.len(),
        challenger_runs: chal.len(),
        rows,
    })
}

/// Loads report files (rejecting unknown schema versions) and compares them.
pub fn compare_runs(paths: &[PathBuf], baseline: &str, challenger: &str) -> Result<Comparison> {
    let reports = paths.iter().map(|p| RunReport::load(p)).collect::<Result<Vec<_>>>()?;
    compare_reports(&reports, baseline, challenger)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(trainer: &str, seed: u64, acc: Option<f64>) -> RunReport {
        let mut r: RunReport = serde_json::from_value(serde_json::json!({
            "schema_version": "1.0", "trainer": trainer, "task": "multi-class", "dataset_id": "d1",
            "config": {}, "seeds": [seed, seed + 1], "epochs": [], "best_epoch": 0,
            "stopped_early": false, "valid": {}, "test": {}
        }))
        .unwrap();
        if let Some(a) = acc {
            r.test.insert("accuracy".into(), a);
        }
        r
    }

    #[test]
    fn identical_sides_have_zero_delta() {
        let mut reports = Vec::new();
        for s in 1..=3 {
            reports.push(report("normal", s, Some(0.5 + s as f64 / 10.0)));
            reports.push(report("deca-p", s, Some(0.5 + s as f64 / 10.0)));
        }
        let c = compare_reports(&reports, "normal", "deca-p").unwrap();
        let row = c.row("accuracy", "test").unwrap();
        assert_eq!(row.delta, Some(0.0));
        assert_eq!(row.winner, Winner::Tie);
    }

    #[test]
    fn medians_and_winner() {
        let reports = vec![
            report("normal", 1, Some(0.5)),
            report("normal", 2, Some(0.7)),
            report("deca-p", 1, Some(0.9)),
            report("deca-p", 2, Some(0.6)),
            report("deca-p", 3, Some(0.8)),
        ];
        let c = compare_reports(&reports, "normal", "deca-p").unwrap();
        let row = c.row("accuracy", "test").unwrap();
        assert!((row.baseline.unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(row.challenger, Some(0.8));
        assert_eq!(row.winner, Winner::Challenger);
    }

    #[test]
    fn missing_metric_is_marked() {
        let reports = vec![report("normal", 1, Some(0.5)), report("deca-p", 1, None), report("deca-p", 2, Some(0.7))];
        let c = compare_reports(&reports, "normal", "deca-p").unwrap();
        let row = c.row("accuracy", "test").unwrap();
        assert_eq!(row.winner, Winner::Gap);
        assert_eq!(row.missing, vec!["deca-p seed 1".to_string()]);
        assert!(c.csv_rows()[0][6] == "gap");
    }

    #[test]
    fn mismatched_datasets_fail() {
        let mut other = report("deca-p", 1, Some(0.7));
        other.dataset_id = "d2".into();
        let err = compare_reports(&[report("normal", 1, Some(0.5)), other], "normal", "deca-p").unwrap_err();
        assert!(matches!(err, Error::Comparison(_)));
        assert!(compare_reports(&[report("normal", 1, Some(0.5))], "normal", "deca-p").is_err());
    }
}
