//! Method vs. baselines on 50% symmetric noise over several seeds.
//!
//!     cargo run --release --example desk_benchmark -- [seeds] [key=value ...]

use std::time::Instant;

use relabel::config::{apply_text, HarnessConfig};
use relabel::harness::prepare_data;
use relabel::metrics::summarize;
use relabel::trainer::{run_experiment_on, Mode};

fn main() -> relabel::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut cfg = HarnessConfig::default();
    let extra: Vec<String> = args.collect();
    apply_text(&mut cfg, &extra.join("\n"))?;

    println!("{:<28} {:>4} {:>9} {:>9} {:>10} {:>10} {:>8}", "mode", "seed", "last_acc", "best_acc", "label_init", "label_end", "secs");
    for mode in [Mode::StandardBaseline, Mode::JointOnlyBaseline, Mode::Method] {
        for seed in 0..seeds {
            let mut c = cfg.clone();
            c.run.seed = seed;
            c.run.mode = mode;
            let (mut train, test) = prepare_data(&c)?;
            let start_label_acc = train.label_accuracy().unwrap_or(f64::NAN);
            let t0 = Instant::now();
            let log = run_experiment_on(&c.run, &mut train, &test)?;
            let s = summarize(&log);
            println!(
                "{:<28} {:>4} {:>9.4} {:>9.4} {:>10.4} {:>10.4} {:>8.1}",
                mode.as_str(),
                seed,
                s.last_mean_acc.unwrap(),
                s.best_mean_acc.unwrap(),
                start_label_acc,
                train.label_accuracy().unwrap_or(f64::NAN),
                t0.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
