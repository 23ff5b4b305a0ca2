//! Clean-label accuracy of a single network on blobs, across separations.
//!
//! Picks a blob geometry for the desk benchmark: a network trained on clean
//! labels should clear 95% test accuracy.
//!
//!     cargo run --release --example calibrate_blobs -- 4 5 6

use relabel::config::HarnessConfig;
use relabel::harness::prepare_data;
use relabel::metrics::summarize;
use relabel::trainer::{run_experiment, Mode};

fn main() -> relabel::Result<()> {
    let separations: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let separations = if separations.is_empty() { vec![4.0, 5.0, 6.0] } else { separations };
    for sep in separations {
        let mut accs = Vec::new();
        for seed in 0..3 {
            let mut cfg = HarnessConfig::default();
            cfg.data.separation = sep;
            cfg.run.seed = seed;
            cfg.run.schedules.tau0 = 0.0;
            cfg.run.mode = Mode::StandardBaseline;
            let (train, test) = prepare_data(&cfg)?;
            let log = run_experiment(&cfg.run, &train, &test)?;
            accs.push(summarize(&log).last_mean_acc.unwrap());
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        println!("separation {sep:>5.2}: clean test accuracy {mean:.4} (per seed {accs:.4?})");
    }
    Ok(())
}
