//! Labeled datasets with hidden clean labels, a Gaussian-blob generator and
//! CSV ingestion.
//!
//! CSV layout: an optional first line `# num_classes=C`, then a header
//! `f0,f1,...,f{d-1},label[,clean_label]`, then one example per row.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::noise::{apply_noise, TransitionMatrix};
use crate::rng::rng_from;

/// Training data with three label views: the labels the trainer currently
/// believes, the labels as originally observed, and (optionally) the ground
/// truth used only for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    current_labels: Vec<usize>,
    original_noisy_labels: Vec<usize>,
    clean_labels: Option<Vec<usize>>,
    num_classes: usize,
}

/// Held-out features with their true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

fn check_labels(name: &str, labels: &[usize], n: usize, num_classes: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::dim(format!("{name} has {} entries for {n} rows", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&y| y >= num_classes) {
        return Err(Error::Index(format!("{name} value {bad} outside [0, {num_classes})")));
    }
    Ok(())
}

impl LabeledDataset {
    pub fn new(
        features: Array2<f64>,
        noisy_labels: Vec<usize>,
        clean_labels: Option<Vec<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::config("num_classes must be at least 2"));
        }
        let n = features.nrows();
        check_labels("label", &noisy_labels, n, num_classes)?;
        if let Some(clean) = &clean_labels {
            check_labels("clean_label", clean, n, num_classes)?;
        }
        Ok(Self {
            features,
            current_labels: noisy_labels.clone(),
            original_noisy_labels: noisy_labels,
            clean_labels,
            num_classes,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn current_labels(&self) -> &[usize] {
        &self.current_labels
    }

    pub fn original_noisy_labels(&self) -> &[usize] {
        &self.original_noisy_labels
    }

    pub fn clean_labels(&self) -> Option<&[usize]> {
        self.clean_labels.as_deref()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fraction of current labels equal to the clean labels, if those are known.
    pub fn label_accuracy(&self) -> Option<f64> {
        let clean = self.clean_labels.as_ref()?;
        if clean.is_empty() {
            return None;
        }
        let hits = clean
            .iter()
            .zip(&self.current_labels)
            .filter(|(a, b)| a == b)
            .count();
        Some(hits as f64 / clean.len() as f64)
    }

    pub(crate) fn set_current_labels(&mut self, labels: Vec<usize>) {
        debug_assert_eq!(labels.len(), self.current_labels.len());
        self.current_labels = labels;
    }

    /// Restores current labels to the originally observed noisy labels.
    pub fn reset_labels(&mut self) {
        self.current_labels = self.original_noisy_labels.clone();
    }

    fn subset(&self, idx: &[usize]) -> Self {
        let pick = |v: &[usize]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            features: self.features.select(Axis(0), idx),
            current_labels: pick(&self.current_labels),
            original_noisy_labels: pick(&self.original_noisy_labels),
            clean_labels: self.clean_labels.as_deref().map(pick),
            num_classes: self.num_classes,
        }
    }

    /// Writes the original noisy labels as `label` and, when known, the clean
    /// labels as `clean_label`.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = format!("# num_classes={}\n", self.num_classes);
        let mut w = csv::Writer::from_writer(Vec::new());
        let d = self.dim();
        let mut header: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        if self.clean_labels.is_some() {
            header.push("clean_label".into());
        }
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.features.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.original_noisy_labels[i].to_string());
            if let Some(clean) = &self.clean_labels {
                rec.push(clean[i].to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?);
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Isotropic Gaussian clusters, `per_class` points per class, class-major order.
///
/// Each center coordinate is drawn from `N(0, separation^2 / (2 d))`, so the
/// expected squared distance between two centers is `separation^2`. Points are
/// `center + spread * N(0, I)`.
pub fn gen_gaussian_blobs(
    num_classes: usize,
    per_class: usize,
    dim: usize,
    separation: f64,
    spread: f64,
    seed: u64,
) -> Result<(Array2<f64>, Vec<usize>)> {
    if num_classes < 2 || per_class < 1 || dim < 2 {
        return Err(Error::config("blobs need C >= 2, n >= 1, d >= 2"));
    }
    if !(separation > 0.0 && separation.is_finite()) || !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::config("separation must be positive and spread non-negative"));
    }
    let mut rng = rng_from(seed);
    let center_scale = separation / (2.0 * dim as f64).sqrt();
    let centers = Array2::from_shape_simple_fn((num_classes, dim), || {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * center_scale
    });
    let n = num_classes * per_class;
    let mut features = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    for c in 0..num_classes {
        for k in 0..per_class {
            let i = c * per_class + k;
            for j in 0..dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                features[[i, j]] = centers[[c, j]] + spread * z;
            }
            labels.push(c);
        }
    }
    Ok((features, labels))
}

/// Corrupts `clean_labels` through `q` and keeps the clean labels for evaluation.
pub fn make_noisy_dataset(
    features: Array2<f64>,
    clean_labels: Vec<usize>,
    q: &TransitionMatrix,
    seed: u64,
) -> Result<LabeledDataset> {
    if features.nrows() != clean_labels.len() {
        return Err(Error::dim(format!(
            "{} feature rows but {} labels",
            features.nrows(),
            clean_labels.len()
        )));
    }
    let noisy = apply_noise(&clean_labels, q, seed)?;
    LabeledDataset::new(features, noisy, Some(clean_labels), q.num_classes())
}

/// Parses the CSV layout described in the module docs.
pub fn load_csv(path: &Path) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<LabeledDataset> {
    let mut declared_classes = None;
    let mut body = text;
    let mut line_offset = 0;
    if let Some(first) = text.lines().next() {
        let trimmed = first.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            let value = rest.strip_prefix("num_classes=").ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("unrecognised directive '{rest}'"),
            })?;
            let c: usize = value.trim().parse().map_err(|_| Error::Parse {
                line: 1,
                message: format!("bad num_classes '{value}'"),
            })?;
            declared_classes = Some(c);
            body = &text[first.len()..];
            body = body.strip_prefix("\r\n").or_else(|| body.strip_prefix('\n')).unwrap_or(body);
            line_offset = 1;
        }
    }

    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = reader.headers().map_err(csv_err)?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    let has_clean = cols.last() == Some(&"clean_label");
    let label_col = if has_clean { cols.len().wrapping_sub(2) } else { cols.len().wrapping_sub(1) };
    if cols.len() < 2 || cols.get(label_col) != Some(&"label") {
        return Err(Error::Format("header must be f0,...,f{d-1},label[,clean_label]".into()));
    }
    for (j, name) in cols[..label_col].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(Error::Format(format!("feature column {j} is named '{name}', expected 'f{j}'")));
        }
    }
    let d = label_col;
    if d == 0 {
        return Err(Error::Format("no feature columns".into()));
    }

    let mut feats = Vec::new();
    let mut noisy = Vec::new();
    let mut clean = Vec::new();
    for (row_no, rec) in reader.records().enumerate() {
        // header is line 1 of the body
        let line = line_offset + row_no + 2;
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => {
                Error::Format(format!("line {line}: row width differs from header"))
            }
            _ => Error::Parse {
                line,
                message: e.to_string(),
            },
        })?;
        for j in 0..d {
            let cell = rec[j].trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                message: format!("feature f{j} is not a number: '{cell}'"),
            })?;
            feats.push(v);
        }
        let parse_label = |cell: &str, what: &str| -> Result<usize> {
            cell.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("{what} is not a non-negative integer: '{cell}'"),
            })
        };
        noisy.push(parse_label(&rec[d], "label")?);
        if has_clean {
            clean.push(parse_label(&rec[d + 1], "clean_label")?);
        }
    }
    let n = noisy.len();
    let max_label = noisy.iter().chain(&clean).copied().max().unwrap_or(0);
    let num_classes = match declared_classes {
        Some(c) => {
            if max_label >= c {
                return Err(Error::Format(format!("label {max_label} >= declared num_classes {c}")));
            }
            c
        }
        None => (max_label + 1).max(2),
    };
    let features = Array2::from_shape_vec((n, d), feats).map_err(|e| Error::Format(e.to_string()))?;
    LabeledDataset::new(features, noisy, has_clean.then_some(clean), num_classes)
}

/// Seeded shuffle split. The held-out side takes `round(test_fraction * N)`
/// examples and uses their clean labels as targets.
pub fn split(dataset: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<(LabeledDataset, TestSet)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!("test_fraction {test_fraction} out of (0,1)")));
    }
    let clean = dataset
        .clean_labels()
        .ok_or_else(|| Error::config("split needs clean labels for the test side"))?;
    let n = dataset.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::config(format!("test_fraction {test_fraction} leaves an empty side for N={n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(seed));
    let (test_idx, train_idx) = idx.split_at(n_test);
    let test = TestSet {
        features: dataset.features.select(Axis(0), test_idx),
        labels: test_idx.iter().map(|&i| clean[i]).collect(),
    };
    Ok((dataset.subset(train_idx), test))
}
