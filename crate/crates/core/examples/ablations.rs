//! Paired ablations on shared corrupted data: interval vs. continuous label
//! updates, and retraining vs. continued training after a large correction.
//!
//!     cargo run --release --example ablations -- [seeds] [key=value ...]

use relabel::config::{apply_text, HarnessConfig};
use relabel::harness::prepare_data;
use relabel::metrics::summarize;
use relabel::trainer::{run_experiment_on, Mode};

fn main() -> relabel::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut cfg = HarnessConfig::default();
    apply_text(&mut cfg, &args.collect::<Vec<_>>().join("\n"))?;
    cfg.validate()?;

    let modes = [Mode::Method, Mode::ContinuousUpdateAblation, Mode::NoRetrainAblation];
    println!("{:>4} {:<28} {:>10} {:>10} {:>9}", "seed", "mode", "label_init", "label_end", "last_acc");
    for seed in 0..seeds {
        cfg.run.seed = seed;
        let (train, test) = prepare_data(&cfg)?;
        for mode in modes {
            let mut run = cfg.run.clone();
            run.mode = mode;
            let mut ds = train.clone();
            let log = run_experiment_on(&run, &mut ds, &test)?;
            println!(
                "{:>4} {:<28} {:>10.4} {:>10.4} {:>9.4}",
                seed,
                mode.as_str(),
                train.label_accuracy().unwrap_or(f64::NAN),
                ds.label_accuracy().unwrap_or(f64::NAN),
                summarize(&log).last_mean_acc.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
