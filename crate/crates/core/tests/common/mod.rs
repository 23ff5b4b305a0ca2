//! Independent reference implementations used by several test targets.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relabel::backbone::{backprop, forward, init_params, NetParams};
use relabel::config::{parse_config, HarnessConfig};
use relabel::losses::{cross_entropy_grad, joint_loss_grad};

pub fn workspace_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn desk_config() -> HarnessConfig {
    parse_config(Some(&workspace_file("configs/desk_benchmark.conf")), &[]).expect("desk config")
}

/// Plain-loop forward pass: tanh hidden layers, softmax output.
pub fn reference_probs(params: &NetParams, x: &Array2<f64>) -> Vec<Vec<f64>> {
    let layers = params.weights().len();
    (0..x.nrows())
        .map(|r| {
            let mut h: Vec<f64> = x.row(r).to_vec();
            for l in 0..layers {
                let w = &params.weights()[l];
                let b = &params.biases()[l];
                let mut z: Vec<f64> = (0..w.ncols())
                    .map(|j| b[j] + (0..w.nrows()).map(|i| h[i] * w[[i, j]]).sum::<f64>())
                    .collect();
                if l + 1 < layers {
                    z.iter_mut().for_each(|v| *v = v.tanh());
                }
                h = z;
            }
            let m = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = h.iter().map(|v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        })
        .collect()
}

/// Mean over selected rows of `(1-λ)(CE1 + CE2) + λ(KL12 + KL21)`.
pub fn reference_joint_loss(
    a: &NetParams,
    b: &NetParams,
    x: &Array2<f64>,
    y: &[usize],
    lambda: f64,
    mask: &[bool],
) -> f64 {
    let pa = reference_probs(a, x);
    let pb = reference_probs(b, x);
    let mut total = 0.0;
    let mut count = 0.0;
    for i in (0..y.len()).filter(|&i| mask[i]) {
        let sup = -pa[i][y[i]].ln() - pb[i][y[i]].ln();
        let kl = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * (u / v).ln()).sum::<f64>();
        let agr = kl(&pa[i], &pb[i]) + kl(&pb[i], &pa[i]);
        total += (1.0 - lambda) * sup + lambda * agr;
        count += 1.0;
    }
    total / count
}

pub fn reference_ce_loss(a: &NetParams, x: &Array2<f64>, y: &[usize]) -> f64 {
    let p = reference_probs(a, x);
    y.iter().enumerate().map(|(i, &c)| -p[i][c].ln()).sum::<f64>() / y.len() as f64
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

pub const FD_STEP: f64 = 1e-5;

fn central_difference(params: &mut NetParams, idx: usize, mut loss: impl FnMut(&NetParams) -> f64) -> f64 {
    let orig = params.get_flat(idx);
    params.set_flat(idx, orig + FD_STEP);
    let up = loss(params);
    params.set_flat(idx, orig - FD_STEP);
    let down = loss(params);
    params.set_flat(idx, orig);
    (up - down) / (2.0 * FD_STEP)
}

/// A random small network shape with at most 500 parameters.
pub fn random_dims(rng: &mut ChaCha8Rng) -> Vec<usize> {
    loop {
        let mut dims = vec![rng.random_range(2..=6)];
        for _ in 0..rng.random_range(1..=2) {
            dims.push(rng.random_range(2..=10));
        }
        dims.push(rng.random_range(2..=5));
        let n: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if n <= 500 {
            return dims;
        }
    }
}

pub struct GradCheck {
    pub params_checked: usize,
    pub worst: f64,
}

/// Compares backprop of the joint loss for both networks against central
/// differences of [`reference_joint_loss`] at every parameter.
pub fn check_joint_gradient(seed: u64, lambda: f64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = random_dims(&mut rng);
    let mut a = init_params(&dims, rng.random()).unwrap();
    let mut b = init_params(&dims, rng.random()).unwrap();
    let batch = rng.random_range(1..=6);
    let x = Array2::from_shape_fn((batch, dims[0]), |_| rng.random_range(-2.0..2.0));
    let classes = *dims.last().unwrap();
    let y: Vec<usize> = (0..batch).map(|_| rng.random_range(0..classes)).collect();
    let mut mask: Vec<bool> = (0..batch).map(|_| rng.random_bool(0.7)).collect();
    mask[rng.random_range(0..batch)] = true;

    let (p1, c1) = forward(&a, x.view()).unwrap();
    let (p2, c2) = forward(&b, x.view()).unwrap();
    let (d1, d2) = joint_loss_grad(&p1, &p2, &y, lambda, &mask).unwrap();
    let g1 = backprop(&a, &c1, &d1).unwrap().to_flat();
    let g2 = backprop(&b, &c2, &d2).unwrap().to_flat();

    let mut worst: f64 = 0.0;
    for (idx, &g) in g1.iter().enumerate() {
        let bb = b.clone();
        let fd = central_difference(&mut a, idx, |p| reference_joint_loss(p, &bb, &x, &y, lambda, &mask));
        worst = worst.max(relative_error(g, fd));
    }
    for (idx, &g) in g2.iter().enumerate() {
        let aa = a.clone();
        let fd = central_difference(&mut b, idx, |p| reference_joint_loss(&aa, p, &x, &y, lambda, &mask));
        worst = worst.max(relative_error(g, fd));
    }
    GradCheck {
        params_checked: g1.len() + g2.len(),
        worst,
    }
}

/// Same comparison for the single-network cross-entropy path.
pub fn check_ce_gradient(seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = random_dims(&mut rng);
    let mut a = init_params(&dims, rng.random()).unwrap();
    let batch = rng.random_range(1..=6);
    let x = Array2::from_shape_fn((batch, dims[0]), |_| rng.random_range(-2.0..2.0));
    let classes = *dims.last().unwrap();
    let y: Vec<usize> = (0..batch).map(|_| rng.random_range(0..classes)).collect();
    let (p, cache) = forward(&a, x.view()).unwrap();
    let (_, d) = cross_entropy_grad(&p, &y).unwrap();
    let g = backprop(&a, &cache, &d).unwrap().to_flat();
    let mut worst: f64 = 0.0;
    for (idx, &gi) in g.iter().enumerate() {
        let fd = central_difference(&mut a, idx, |p| reference_ce_loss(p, &x, &y));
        worst = worst.max(relative_error(gi, fd));
    }
    GradCheck {
        params_checked: g.len(),
        worst,
    }
}

/// Random loss vector. Roughly a third of instances draw from a handful of
/// levels so that ties are common.
pub fn random_losses(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match rng.random_range(0..3) {
        0 => {
            let levels = rng.random_range(1..=4);
            (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.5).collect()
        }
        _ => (0..n).map(|_| rng.random_range(0.0..5.0)).collect(),
    }
}

/// Log-uniform length in `[1, max]`, so short and long inputs both appear.
pub fn random_len(rng: &mut ChaCha8Rng, max: usize) -> usize {
    let u: f64 = rng.random_range(0.0..=(max as f64).ln());
    (u.exp().round() as usize).clamp(1, max)
}

/// Indices of the `k` smallest values, ties broken by lower index.
pub fn oracle_smallest(values: &[f64], k: usize) -> BTreeSet<usize> {
    let mut pairs: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
    pairs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    pairs.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Indices of the `k` largest values, ties broken by lower index.
pub fn oracle_largest(values: &[f64], k: usize) -> BTreeSet<usize> {
    let mut pairs: Vec<(f64, i64)> = values.iter().copied().zip(0..).map(|(v, i): (f64, i64)| (v, -i)).collect();
    pairs.sort_by(|p, q| q.partial_cmp(p).unwrap());
    pairs.into_iter().take(k).map(|(_, i)| (-i) as usize).collect()
}

pub fn oracle_small_loss_mask(losses: &[f64], rate: f64) -> Vec<bool> {
    let keep = ((rate * losses.len() as f64).floor() as usize).max(1);
    let chosen = oracle_smallest(losses, keep);
    (0..losses.len()).map(|i| chosen.contains(&i)).collect()
}

pub fn oracle_correction(agr: &[f64], sup: &[f64], rate: f64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let n = agr.len() as f64;
    let confident = oracle_smallest(agr, (rate * n).ceil() as usize);
    let noisy = oracle_largest(sup, (rate * n).floor() as usize);
    let both = confident.intersection(&noisy).copied().collect();
    (confident.into_iter().collect(), noisy.into_iter().collect(), both)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
