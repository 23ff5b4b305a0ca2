//! Builds each label transition matrix, corrupts a balanced label vector
//! with it, and compares the expected and observed flip rates.
//!
//!     cargo run --example noise_injection -- [tau] [out.csv]

use relabel::noise::{apply_noise, circular_q, cifar10, empirical_flip_rate, pairmap_q, symmetric_q};

fn main() -> relabel::Result<()> {
    let mut args = std::env::args().skip(1);
    let tau: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.45);
    let out = args.next();

    let clean: Vec<usize> = (0..10_000).map(|i| i % 10).collect();
    let matrices = [
        ("symmetric", symmetric_q(10, tau)?),
        ("pairmap", pairmap_q(10, &cifar10::PAIRS, tau)?),
        ("circular", circular_q(10, 5, tau)?),
    ];
    for (name, q) in &matrices {
        let noisy = apply_noise(&clean, q, 42)?;
        println!(
            "{name:<10} expected flip rate {:.4}, observed {:.4}",
            q.mean_flip_mass(),
            empirical_flip_rate(&clean, &noisy)?
        );
    }
    println!("\nsymmetric Q:\n{}", matrices[0].1.to_csv());
    if let Some(path) = out {
        matrices[1].1.write_csv(std::path::Path::new(&path))?;
        println!("wrote pairmap Q to {path}");
    }
    Ok(())
}
