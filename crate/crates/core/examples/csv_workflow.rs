//! Round trip through files: generate a noisy blob dataset, save it as CSV,
//! load it back, train on it, and write the metrics log.
//!
//!     cargo run --release --example csv_workflow -- [dir]

use std::path::PathBuf;

use relabel::config::HarnessConfig;
use relabel::datasets::{load_csv, split};
use relabel::harness::{build_dataset, run_header, Command};
use relabel::metrics::{read_metrics, write_log};
use relabel::trainer::run_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "csv_workflow_out".into()));
    std::fs::create_dir_all(&dir)?;

    let mut cfg = HarnessConfig::default();
    cfg.data.per_class = 200;
    cfg.run.stage1_epochs = 30;
    cfg.run.finetune_epochs = 10;

    let csv = dir.join("blobs.csv");
    build_dataset(&cfg)?.write_csv(&csv)?;
    let data = load_csv(&csv)?;
    println!("{}: {} rows, {} classes, label accuracy {:.3}", csv.display(), data.len(), data.num_classes(), data.label_accuracy().unwrap_or(f64::NAN));

    let (train, test) = split(&data, 0.25, 7)?;
    let records = run_experiment(&cfg.run, &train, &test)?;
    let log = dir.join("metrics.jsonl");
    write_log(Some(&run_header(&cfg, Command::Train, cfg.run.mode)), &records, &log)?;

    let parsed = read_metrics(&log)?;
    let last = parsed.records.last().expect("at least one epoch");
    println!(
        "{}: {} records, final test accuracy {:.3}, final label accuracy {:.3}",
        log.display(),
        parsed.records.len(),
        last.mean_acc,
        last.label_acc.unwrap_or(f64::NAN)
    );
    Ok(())
}
