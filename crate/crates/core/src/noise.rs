//! Label transition matrices and label corruption.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Row-stochastic matrix: `q[[i, j]]` is the probability that clean class `i`
/// is observed as class `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    q: Array2<f64>,
    tau: f64,
}

/// CIFAR-10 class indices in the canonical order.
pub mod cifar10 {
    pub const AIRPLANE: usize = 0;
    pub const AUTOMOBILE: usize = 1;
    pub const BIRD: usize = 2;
    pub const CAT: usize = 3;
    pub const DEER: usize = 4;
    pub const DOG: usize = 5;
    pub const HORSE: usize = 7;
    pub const TRUCK: usize = 9;

    /// truck -> automobile, deer -> horse, bird -> airplane, cat <-> dog.
    pub const PAIRS: [(usize, usize); 5] = [
        (TRUCK, AUTOMOBILE),
        (DEER, HORSE),
        (BIRD, AIRPLANE),
        (CAT, DOG),
        (DOG, CAT),
    ];
}

impl TransitionMatrix {
    /// Wraps an explicit matrix after checking it is square and row-stochastic.
    pub fn from_matrix(q: Array2<f64>, tau: f64) -> Result<Self> {
        if q.nrows() != q.ncols() || q.nrows() < 2 {
            return Err(Error::dim(format!("transition matrix must be square with C >= 2, got {:?}", q.dim())));
        }
        for (i, row) in q.rows().into_iter().enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::config(format!("row {i} has an entry outside [0,1]")));
            }
            if (row.sum() - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!("row {i} sums to {}", row.sum())));
            }
        }
        Ok(Self { q, tau })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.q
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn num_classes(&self) -> usize {
        self.q.nrows()
    }

    /// Expected fraction of labels that change when classes are drawn uniformly.
    pub fn mean_flip_mass(&self) -> f64 {
        let c = self.num_classes();
        (0..c).map(|i| 1.0 - self.q[[i, i]]).sum::<f64>() / c as f64
    }

    /// One line per row, comma-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.q.rows() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::config(format!("tau {tau} out of [0,1]")));
    }
    Ok(())
}

fn check_classes(c: usize) -> Result<()> {
    if c < 2 {
        return Err(Error::config("num_classes must be at least 2"));
    }
    Ok(())
}

/// Keeps the label with probability `1 - tau`, otherwise flips uniformly to one of the other classes.
pub fn symmetric_q(num_classes: usize, tau: f64) -> Result<TransitionMatrix> {
    check_classes(num_classes)?;
    check_tau(tau)?;
    let off = tau / (num_classes - 1) as f64;
    let q = Array2::from_shape_fn((num_classes, num_classes), |(i, j)| if i == j { 1.0 - tau } else { off });
    Ok(TransitionMatrix { q, tau })
}

/// Each listed source flips to its target with probability `tau`; other classes are untouched.
pub fn pairmap_q(num_classes: usize, pairs: &[(usize, usize)], tau: f64) -> Result<TransitionMatrix> {
    check_classes(num_classes)?;
    check_tau(tau)?;
    let mut q = Array2::eye(num_classes);
    let mut seen = vec![false; num_classes];
    for &(src, dst) in pairs {
        if src >= num_classes || dst >= num_classes {
            return Err(Error::config(format!("pair {src}->{dst} outside {num_classes} classes")));
        }
        if src == dst {
            return Err(Error::config(format!("pair {src}->{dst} maps a class to itself")));
        }
        if std::mem::replace(&mut seen[src], true) {
            return Err(Error::config(format!("class {src} listed as a source more than once")));
        }
        q[[src, src]] = 1.0 - tau;
        q[[src, dst]] = tau;
    }
    Ok(TransitionMatrix { q, tau })
}

/// Within each contiguous block of `superclass_size` classes, class `i` flips
/// to the next class in the block (wrapping) with probability `tau`.
pub fn circular_q(num_classes: usize, superclass_size: usize, tau: f64) -> Result<TransitionMatrix> {
    check_classes(num_classes)?;
    check_tau(tau)?;
    if superclass_size < 2 || num_classes % superclass_size != 0 {
        return Err(Error::config(format!(
            "superclass size {superclass_size} must be >= 2 and divide {num_classes}"
        )));
    }
    let mut q = Array2::zeros((num_classes, num_classes));
    for i in 0..num_classes {
        let base = i - i % superclass_size;
        let next = base + (i - base + 1) % superclass_size;
        q[[i, i]] += 1.0 - tau;
        q[[i, next]] += tau;
    }
    Ok(TransitionMatrix { q, tau })
}

/// Draws each noisy label independently from its clean label's row of `q`.
pub fn apply_noise(clean_labels: &[usize], q: &TransitionMatrix, seed: u64) -> Result<Vec<usize>> {
    let c = q.num_classes();
    if let Some(bad) = clean_labels.iter().find(|&&y| y >= c) {
        return Err(Error::Index(format!("label {bad} outside [0, {c})")));
    }
    let mut rng = rng_from(seed);
    Ok(clean_labels
        .iter()
        .map(|&y| {
            let u: f64 = rng.random();
            let row = q.q.row(y);
            let mut acc = 0.0;
            for (j, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    return j;
                }
            }
            // u landed in the rounding gap above the last partial sum.
            row.iter().rposition(|&p| p > 0.0).unwrap_or(y)
        })
        .collect())
}

/// Fraction of positions where the two label vectors differ.
pub fn empirical_flip_rate(clean: &[usize], noisy: &[usize]) -> Result<f64> {
    if clean.len() != noisy.len() {
        return Err(Error::dim(format!("label vectors of length {} and {}", clean.len(), noisy.len())));
    }
    if clean.is_empty() {
        return Ok(0.0);
    }
    let diff = clean.iter().zip(noisy).filter(|(a, b)| a != b).count();
    Ok(diff as f64 / clean.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_stochastic(t: &TransitionMatrix) {
        for row in t.matrix().rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn symmetric_entries() {
        let t = symmetric_q(10, 0.2).unwrap();
        assert_stochastic(&t);
        assert!((t.matrix()[[3, 3]] - 0.8).abs() < 1e-15);
        assert!((t.matrix()[[3, 4]] - 0.2 / 9.0).abs() < 1e-15);
        assert_eq!(symmetric_q(5, 0.0).unwrap().matrix(), &Array2::<f64>::eye(5));
        assert!(matches!(symmetric_q(10, 1.2), Err(Error::Config(_))));
        assert!(symmetric_q(1, 0.2).is_err());
    }

    #[test]
    fn cifar10_pairmap() {
        use cifar10::*;
        let t = pairmap_q(10, &PAIRS, 0.4).unwrap();
        assert_stochastic(&t);
        let q = t.matrix();
        assert!((q[[TRUCK, TRUCK]] - 0.6).abs() < 1e-15);
        assert!((q[[TRUCK, AUTOMOBILE]] - 0.4).abs() < 1e-15);
        assert!((q[[CAT, DOG]] - 0.4).abs() < 1e-15);
        assert!((q[[DOG, CAT]] - 0.4).abs() < 1e-15);
        // frog and ship are unlisted
        assert_eq!(q[[6, 6]], 1.0);
        assert_eq!(q[[8, 8]], 1.0);
        assert_eq!(pairmap_q(10, &PAIRS, 0.0).unwrap().matrix(), &Array2::<f64>::eye(10));
        assert!(matches!(pairmap_q(10, &[(1, 2), (1, 3)], 0.3), Err(Error::Config(_))));
    }

    #[test]
    fn circular_blocks() {
        let t = circular_q(100, 5, 0.4).unwrap();
        assert_stochastic(&t);
        let q = t.matrix();
        assert!((q[[0, 1]] - 0.4).abs() < 1e-15);
        assert!((q[[0, 0]] - 0.6).abs() < 1e-15);
        assert!((q[[4, 0]] - 0.4).abs() < 1e-15);
        assert!((q[[9, 5]] - 0.4).abs() < 1e-15);
        assert_eq!(q[[4, 5]], 0.0);
        assert_eq!(circular_q(10, 5, 0.0).unwrap().matrix(), &Array2::<f64>::eye(10));
        let swap = circular_q(4, 2, 1.0).unwrap();
        let expected = ndarray::array![
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0]
        ];
        assert_eq!(swap.matrix(), &expected);
        assert!(matches!(circular_q(10, 3, 0.2), Err(Error::Config(_))));
    }

    #[test]
    fn apply_noise_identity_and_determinism() {
        let clean: Vec<usize> = (0..500).map(|i| i % 10).collect();
        let id = symmetric_q(10, 0.0).unwrap();
        assert_eq!(apply_noise(&clean, &id, 3).unwrap(), clean);
        let q = symmetric_q(10, 0.3).unwrap();
        assert_eq!(apply_noise(&clean, &q, 9).unwrap(), apply_noise(&clean, &q, 9).unwrap());
        assert_ne!(apply_noise(&clean, &q, 9).unwrap(), apply_noise(&clean, &q, 10).unwrap());
        assert!(matches!(apply_noise(&[10], &q, 0), Err(Error::Index(_))));
    }

    #[test]
    fn flip_rate_counts() {
        assert_eq!(empirical_flip_rate(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(empirical_flip_rate(&[1, 2, 3], &[0, 0, 0]).unwrap(), 1.0);
        assert!((empirical_flip_rate(&[0, 1, 2], &[0, 1, 3]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(empirical_flip_rate(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn csv_rows() {
        let t = symmetric_q(3, 0.5).unwrap();
        let csv = t.to_csv();
        let rows: Vec<Vec<f64>> = csv
            .lines()
            .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], vec![0.5, 0.25, 0.25]);
    }
}
