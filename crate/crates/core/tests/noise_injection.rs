use ndarray::Axis;
use relabel::noise::{apply_noise, circular_q, cifar10, empirical_flip_rate, pairmap_q, symmetric_q, TransitionMatrix};

fn balanced(n: usize, c: usize) -> Vec<usize> {
    (0..n).map(|i| i % c).collect()
}

fn assert_row_stochastic(q: &TransitionMatrix) {
    for (r, row) in q.matrix().axis_iter(Axis(0)).enumerate() {
        assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)), "row {r} has an entry outside [0,1]");
        assert!((row.sum() - 1.0).abs() < 1e-9, "row {r} sums to {}", row.sum());
    }
}

#[test]
fn symmetric_flip_rate_at_half() {
    let clean = balanced(10_000, 10);
    let q = symmetric_q(10, 0.5).unwrap();
    let noisy = apply_noise(&clean, &q, 2024).unwrap();
    let rate = empirical_flip_rate(&clean, &noisy).unwrap();
    assert!((rate - 0.5).abs() <= 0.01, "flip rate {rate}");
}

#[test]
fn constructors_are_row_stochastic() {
    for c in [2usize, 3, 5, 10, 20, 100] {
        for tau in [0.0, 0.1, 0.2, 0.45, 0.5, 0.8, 1.0] {
            assert_row_stochastic(&symmetric_q(c, tau).unwrap());
            let pairs: Vec<(usize, usize)> = (0..c).map(|i| (i, (i + 1) % c)).collect();
            assert_row_stochastic(&pairmap_q(c, &pairs, tau).unwrap());
            if c % 5 == 0 {
                assert_row_stochastic(&circular_q(c, 5, tau).unwrap());
            }
        }
    }
    assert_row_stochastic(&pairmap_q(10, &cifar10::PAIRS, 0.45).unwrap());
}

#[test]
fn flip_rates_within_three_sigma() {
    let n = 20_000;
    let c = 10;
    let clean = balanced(n, c);
    let pairs: Vec<(usize, usize)> = (0..c).map(|i| (i, (i + 1) % c)).collect();
    for tau in [0.2, 0.45] {
        for (name, q) in [
            ("symmetric", symmetric_q(c, tau).unwrap()),
            ("pairmap", pairmap_q(c, &pairs, tau).unwrap()),
            ("circular", circular_q(c, 5, tau).unwrap()),
        ] {
            let expected = q.mean_flip_mass();
            let noisy = apply_noise(&clean, &q, 7).unwrap();
            let got = empirical_flip_rate(&clean, &noisy).unwrap();
            let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
            assert!((got - expected).abs() <= 3.0 * sigma, "{name} τ={tau}: {got} vs {expected}");
        }
    }
}

#[test]
fn symmetric_flips_spread_evenly() {
    let c = 10;
    let clean = vec![3usize; 50_000];
    let q = symmetric_q(c, 0.5).unwrap();
    let noisy = apply_noise(&clean, &q, 11).unwrap();
    let mut counts = vec![0usize; c];
    for &y in &noisy {
        counts[y] += 1;
    }
    let n = clean.len() as f64;
    let chi2: f64 = (0..c)
        .map(|j| {
            let e = n * q.matrix()[[3, j]];
            (counts[j] as f64 - e).powi(2) / e
        })
        .sum();
    // 9 degrees of freedom; 27.88 is the 0.999 quantile.
    assert!(chi2 < 27.88, "chi-square {chi2}, counts {counts:?}");
}

#[test]
fn noise_is_seed_deterministic() {
    let clean = balanced(1000, 10);
    let q = symmetric_q(10, 0.4).unwrap();
    assert_eq!(apply_noise(&clean, &q, 5).unwrap(), apply_noise(&clean, &q, 5).unwrap());
    assert_ne!(apply_noise(&clean, &q, 5).unwrap(), apply_noise(&clean, &q, 6).unwrap());
}
