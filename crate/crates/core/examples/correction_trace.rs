//! Prints the per-epoch log of one method run: test accuracy, label
//! accuracy, noise estimate, λ, and each correction/retrain event.
//!
//!     cargo run --release --example correction_trace -- [key=value ...]

use relabel::config::{apply_text, HarnessConfig};
use relabel::harness::prepare_data;
use relabel::trainer::run_experiment;

fn main() -> relabel::Result<()> {
    let mut cfg = HarnessConfig::default();
    let extra: Vec<String> = std::env::args().skip(1).collect();
    apply_text(&mut cfg, &extra.join("\n"))?;
    cfg.validate()?;
    let (train, test) = prepare_data(&cfg)?;
    println!(
        "mode={} N={} initial label accuracy {:.4}",
        cfg.run.mode,
        train.len(),
        train.label_accuracy().unwrap_or(f64::NAN)
    );
    println!("{:<9} {:>5} {:>3} {:>7} {:>6} {:>8} {:>8} {:>9} {:>9} {:>8}", "stage", "epoch", "k", "tau", "lambda", "acc", "disagree", "label_acc", "corrected", "retrain");
    for r in run_experiment(&cfg.run, &train, &test)? {
        println!(
            "{:<9} {:>5} {:>3} {:>7.4} {:>6} {:>8.4} {:>8} {:>9.4} {:>9} {:>8}",
            format!("{:?}", r.stage).to_lowercase(),
            r.epoch,
            r.k,
            r.tau_est,
            r.lambda.map(|l| format!("{l:.3}")).unwrap_or_else(|| "-".into()),
            r.mean_acc,
            r.disagreement_rate.map(|d| format!("{d:.4}")).unwrap_or_else(|| "-".into()),
            r.label_acc.unwrap_or(f64::NAN),
            r.num_corrected_this_event,
            if r.retrained { "yes" } else { "" }
        );
    }
    Ok(())
}
