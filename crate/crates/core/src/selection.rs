//! Small-loss batch selection, confident/noisy set selection for label
//! correction, and the schedules driving both.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schedule hyperparameters for selection, correction and the joint-loss weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedules {
    /// Initial noise-rate estimate.
    pub tau0: f64,
    /// Epochs over which the small-loss selection rate ramps from 1 to `1 - tau`.
    pub t_k: u32,
    pub lambda_start: f64,
    pub lambda_end: f64,
    /// Epochs between label updates.
    pub t_update: u32,
    /// Networks are retrained from scratch when the correction rate exceeds this.
    pub c_restart: f64,
    /// Feed `tau0` instead of the running estimate into both rate schedules.
    pub rates_use_initial_tau: bool,
    /// Decrease the noise estimate by the number of labels actually changed
    /// rather than the size of the correction set.
    pub tau_update_counts_changed: bool,
}

impl Default for Schedules {
    fn default() -> Self {
        Self {
            tau0: 0.5,
            t_k: 10,
            lambda_start: 0.9,
            lambda_end: 0.7,
            t_update: 10,
            c_restart: 0.05,
            rates_use_initial_tau: false,
            tau_update_counts_changed: false,
        }
    }
}

impl Schedules {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau", self.tau0),
            ("lambda_start", self.lambda_start),
            ("lambda_end", self.lambda_end),
            ("c_restart", self.c_restart),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} out of [0,1]")));
            }
        }
        if self.lambda_start < self.lambda_end {
            return Err(Error::config("lambda_start must be >= lambda_end"));
        }
        if self.t_k == 0 {
            return Err(Error::config("t_k must be positive"));
        }
        if self.t_update == 0 {
            return Err(Error::config("t_update must be positive"));
        }
        Ok(())
    }
}

/// Indices and labels produced by one label-correction event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionOutcome {
    pub correction_set: Vec<usize>,
    /// Members of the correction set whose label was rewritten.
    pub changed: Vec<usize>,
    pub new_tau: f64,
    pub new_labels: Vec<usize>,
    /// Correction rate that sized the candidate sets.
    pub rate: f64,
}

/// Current labels after applying a correction set.
#[derive(Debug, Clone, PartialEq)]
pub struct Relabeling {
    pub labels: Vec<usize>,
    pub changed: Vec<usize>,
}

const COUNT_EPS: f64 = 1e-9;

/// `floor(rate * n)`, tolerant of products like `0.7 * 10` landing just above an integer.
pub fn floor_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64 + COUNT_EPS).floor().max(0.0) as usize).min(n)
}

/// `ceil(rate * n)` with the same tolerance as [`floor_count`].
pub fn ceil_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64 - COUNT_EPS).ceil().max(0.0) as usize).min(n)
}

/// Fraction of each mini-batch kept at epoch `t`: `1 - min(t / t_k * tau, tau)`.
pub fn selection_rate(t: u32, t_k: u32, tau: f64) -> f64 {
    let ramp = if t_k == 0 { tau } else { t as f64 / t_k as f64 * tau };
    1.0 - ramp.min(tau)
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| match values[b].total_cmp(&values[a]) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    idx
}

/// Marks the `max(1, floor(rate * B))` smallest losses; ties go to the lower index.
pub fn small_loss_select(per_example_joint: &[f64], rate: f64) -> Result<Vec<bool>> {
    let b = per_example_joint.len();
    if b == 0 {
        return Err(Error::EmptySelection);
    }
    let keep = floor_count(rate.clamp(0.0, 1.0), b).max(1);
    let mut mask = vec![false; b];
    for &i in ascending(per_example_joint).iter().take(keep) {
        mask[i] = true;
    }
    Ok(mask)
}

/// `C(k) = tau / (2k)`.
pub fn correction_rate(k: u32, tau_prev: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::config("correction counter k starts at 1"));
    }
    Ok(tau_prev / (2.0 * k as f64))
}

/// Confident, noisy and correction index sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionSets {
    pub confident: Vec<usize>,
    pub noisy: Vec<usize>,
    pub correction: Vec<usize>,
}

/// Confident = the `ceil(rate * N)` smallest agreement losses; noisy = the
/// `floor(rate * N)` largest supervised losses; correction = their intersection.
pub fn select_correction_set(agr: &[f64], sup: &[f64], rate: f64) -> Result<CorrectionSets> {
    if agr.len() != sup.len() {
        return Err(Error::dim(format!("agr has {} entries, sup has {}", agr.len(), sup.len())));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::config(format!("correction rate {rate} out of [0,1]")));
    }
    let n = agr.len();
    let mut confident: Vec<usize> = ascending(agr).into_iter().take(ceil_count(rate, n)).collect();
    let mut noisy: Vec<usize> = descending(sup).into_iter().take(floor_count(rate, n)).collect();
    confident.sort_unstable();
    noisy.sort_unstable();
    let mut in_noisy = vec![false; n];
    for &i in &noisy {
        in_noisy[i] = true;
    }
    let correction = confident.iter().copied().filter(|&i| in_noisy[i]).collect();
    Ok(CorrectionSets {
        confident,
        noisy,
        correction,
    })
}

/// Rewrites a label in the correction set only when both networks predict the
/// same class and it differs from the current label.
pub fn apply_correction(
    current_labels: &[usize],
    correction: &[usize],
    pred1: &[usize],
    pred2: &[usize],
) -> Result<Relabeling> {
    let n = current_labels.len();
    if pred1.len() != n || pred2.len() != n {
        return Err(Error::dim(format!(
            "predictions of length {} and {} for {n} labels",
            pred1.len(),
            pred2.len()
        )));
    }
    let mut labels = current_labels.to_vec();
    let mut changed = Vec::new();
    for &i in correction {
        if i >= n {
            return Err(Error::Index(format!("correction index {i} outside [0, {n})")));
        }
        if pred1[i] == pred2[i] && pred1[i] != labels[i] {
            labels[i] = pred1[i];
            changed.push(i);
        }
    }
    changed.sort_unstable();
    changed.dedup();
    Ok(Relabeling { labels, changed })
}

/// `tau_k = tau_{k-1} - |D_correction| / N`, clamped to `[0, 1]`.
pub fn update_tau(tau_prev: f64, correction_set_size: usize, n: usize) -> f64 {
    if n == 0 {
        return tau_prev.clamp(0.0, 1.0);
    }
    (tau_prev - correction_set_size as f64 / n as f64).clamp(0.0, 1.0)
}
