//! Run an experiment config and print the median comparison of two trainers.
//!
//! `cargo run --release --example run_config -- configs/desk_ranking.json out/rank deca-p`

use std::path::Path;
use std::time::Instant;

use deca::experiment::{compare_runs, read_config, run_experiment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [config, out, challenger] = args.as_slice() else {
        return Err("usage: run_config <config.json> <out-dir> <challenger>".into());
    };
    let raw = read_config(Path::new(config))?;
    let start = Instant::now();
    let output = run_experiment(&raw, Path::new(out), None)?;
    print!("{}", compare_runs(&output.report_paths(), "normal", challenger)?);
    for run in &output.runs {
        println!("{} {:?}", run.id, run.report.test);
    }
    println!("{:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
