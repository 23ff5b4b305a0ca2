//! Cross-entropy, symmetric-KL agreement loss and the joint loss that mixes
//! them, plus their gradients with respect to each network's logits.

use ndarray::{Array1, Array2, ArrayView1};

use crate::backbone::PROB_FLOOR;
use crate::error::{Error, Result};

/// Per-example loss components for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct PerExampleLosses {
    /// Sum of both networks' cross-entropy against the label.
    pub sup: Array1<f64>,
    /// Symmetric KL between the two networks' predictions.
    pub agr: Array1<f64>,
    /// `(1 - lambda) * sup + lambda * agr`.
    pub joint: Array1<f64>,
    pub lambda_used: f64,
}

#[inline]
fn floored(p: f64) -> f64 {
    p.max(PROB_FLOOR)
}

/// `-ln(max(p[y], floor))`.
pub fn cross_entropy(p: ArrayView1<'_, f64>, y: usize) -> Result<f64> {
    if y >= p.len() {
        return Err(Error::Index(format!("label {y} outside [0, {})", p.len())));
    }
    Ok(-floored(p[y]).ln())
}

/// `sum_c p[c] ln(p[c] / q[c])`, both arguments floored.
pub fn kl_div(p: ArrayView1<'_, f64>, q: ArrayView1<'_, f64>) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dim(format!("kl_div lengths {} and {}", p.len(), q.len())));
    }
    let kl = p
        .iter()
        .zip(q.iter())
        .map(|(&a, &b)| {
            let (a, b) = (floored(a), floored(b));
            a * (a.ln() - b.ln())
        })
        .sum::<f64>();
    // Rounding can leave a tiny negative value for p == q.
    Ok(kl.max(0.0))
}

/// `KL(p1 || p2) + KL(p2 || p1)`.
pub fn agreement_loss(p1: ArrayView1<'_, f64>, p2: ArrayView1<'_, f64>) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::dim(format!("agreement_loss lengths {} and {}", p1.len(), p2.len())));
    }
    // Written as one symmetric sum so argument order cannot change the result.
    let s = p1
        .iter()
        .zip(p2.iter())
        .map(|(&a, &b)| {
            let (a, b) = (floored(a), floored(b));
            (a - b) * (a.ln() - b.ln())
        })
        .sum::<f64>();
    Ok(s.max(0.0))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config(format!("lambda {lambda} out of [0,1]")));
    }
    Ok(())
}

fn check_batch(p1: &Array2<f64>, p2: &Array2<f64>, y: &[usize]) -> Result<()> {
    if p1.dim() != p2.dim() {
        return Err(Error::dim(format!("prob shapes {:?} and {:?}", p1.dim(), p2.dim())));
    }
    if p1.nrows() != y.len() {
        return Err(Error::dim(format!("{} prob rows but {} labels", p1.nrows(), y.len())));
    }
    Ok(())
}

/// Per-example supervised, agreement and joint losses.
pub fn joint_losses(p1: &Array2<f64>, p2: &Array2<f64>, y: &[usize], lambda: f64) -> Result<PerExampleLosses> {
    check_lambda(lambda)?;
    check_batch(p1, p2, y)?;
    let n = y.len();
    let mut sup = Array1::zeros(n);
    let mut agr = Array1::zeros(n);
    let mut joint = Array1::zeros(n);
    for i in 0..n {
        let (r1, r2) = (p1.row(i), p2.row(i));
        sup[i] = cross_entropy(r1, y[i])? + cross_entropy(r2, y[i])?;
        agr[i] = agreement_loss(r1, r2)?;
        joint[i] = (1.0 - lambda) * sup[i] + lambda * agr[i];
    }
    Ok(PerExampleLosses {
        sup,
        agr,
        joint,
        lambda_used: lambda,
    })
}

/// Gradient of the mean joint loss over the selected rows with respect to
/// both networks' logits. Unselected rows are zero.
///
/// For softmax outputs the symmetric-KL term differentiates to
/// `p1 * (ln(p1/p2) - KL(p1||p2)) + p1 - p2` for network 1, and symmetrically
/// for network 2; cross-entropy contributes `p - onehot(y)`.
pub fn joint_loss_grad(
    p1: &Array2<f64>,
    p2: &Array2<f64>,
    y: &[usize],
    lambda: f64,
    selection_mask: &[bool],
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_lambda(lambda)?;
    check_batch(p1, p2, y)?;
    if selection_mask.len() != y.len() {
        return Err(Error::dim(format!("mask length {} != batch {}", selection_mask.len(), y.len())));
    }
    let selected = selection_mask.iter().filter(|&&m| m).count();
    if selected == 0 {
        return Err(Error::EmptySelection);
    }
    let classes = p1.ncols();
    let scale = 1.0 / selected as f64;
    let mut d1 = Array2::zeros(p1.dim());
    let mut d2 = Array2::zeros(p2.dim());
    for (i, _) in selection_mask.iter().enumerate().filter(|(_, &m)| m) {
        if y[i] >= classes {
            return Err(Error::Index(format!("label {} outside [0, {classes})", y[i])));
        }
        let (r1, r2) = (p1.row(i), p2.row(i));
        let kl12 = kl_div(r1, r2)?;
        let kl21 = kl_div(r2, r1)?;
        for c in 0..classes {
            let (a, b) = (floored(r1[c]), floored(r2[c]));
            let log_ratio = a.ln() - b.ln();
            let onehot = if c == y[i] { 1.0 } else { 0.0 };
            let agr1 = a * (log_ratio - kl12) + a - b;
            let agr2 = b * (-log_ratio - kl21) + b - a;
            d1[[i, c]] = scale * ((1.0 - lambda) * (a - onehot) + lambda * agr1);
            d2[[i, c]] = scale * ((1.0 - lambda) * (b - onehot) + lambda * agr2);
        }
    }
    Ok((d1, d2))
}

/// Mean cross-entropy over a batch and its logit gradient, for single-network training.
pub fn cross_entropy_grad(p: &Array2<f64>, y: &[usize]) -> Result<(f64, Array2<f64>)> {
    if p.nrows() != y.len() || y.is_empty() {
        return Err(Error::dim(format!("{} prob rows but {} labels", p.nrows(), y.len())));
    }
    let scale = 1.0 / y.len() as f64;
    let mut loss = 0.0;
    let mut d = p.clone();
    for (i, &label) in y.iter().enumerate() {
        loss += cross_entropy(p.row(i), label)?;
        d[[i, label]] -= 1.0;
    }
    d *= scale;
    Ok((loss * scale, d))
}
