//! `key=value` run configuration.
//!
//! Blank lines and `#` comments are ignored; unknown keys are rejected.
//! Command-line overrides are applied after the file, in order.
//!
//! Desk-scale defaults next to the values used for CIFAR-scale runs:
//!
//! | key               | default | CIFAR-scale |
//! |-------------------|---------|-------------|
//! | stage1_epochs     | 60      | 250         |
//! | finetune_epochs   | 20      | 50          |
//! | t_update          | 10      | 50          |
//! | t_k               | 10      | 10          |
//! | c_restart         | 0.05    | 0.05        |
//! | lambda_start/end  | 0.9/0.7 | 0.9/0.7     |
//! | lr_stage1         | 0.001   | 0.001       |
//! | batch_size        | 128     | 128         |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::noise::{circular_q, cifar10, pairmap_q, symmetric_q, TransitionMatrix};
use crate::trainer::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Symmetric,
    Pairmap,
    Circular,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Symmetric => "symmetric",
            NoiseKind::Pairmap => "pairmap",
            NoiseKind::Circular => "circular",
        }
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(NoiseKind::Symmetric),
            "pairmap" => Ok(NoiseKind::Pairmap),
            "circular" => Ok(NoiseKind::Circular),
            _ => Err(Error::config(format!("noise '{s}' is not one of symmetric, pairmap, circular"))),
        }
    }
}

/// How label noise is injected into generated data.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub superclass_size: usize,
    /// Explicit source->target pairs; CIFAR-10's mapping is used when absent.
    pub pairs: Option<Vec<(usize, usize)>>,
}

impl NoiseConfig {
    pub fn transition(&self, num_classes: usize, tau: f64) -> Result<TransitionMatrix> {
        match self.kind {
            NoiseKind::Symmetric => symmetric_q(num_classes, tau),
            NoiseKind::Circular => circular_q(num_classes, self.superclass_size, tau),
            NoiseKind::Pairmap => match &self.pairs {
                Some(p) => pairmap_q(num_classes, p, tau),
                None if num_classes == 10 => pairmap_q(num_classes, &cifar10::PAIRS, tau),
                None => Err(Error::config("pairs must be given unless classes=10")),
            },
        }
    }
}

/// Synthetic data shape, or a CSV file to load instead.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub separation: f64,
    pub spread: f64,
    pub test_fraction: f64,
    pub path: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            classes: 10,
            per_class: 700,
            dim: 20,
            separation: 6.0,
            spread: 1.0,
            test_fraction: 2.0 / 7.0,
            path: None,
        }
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub run: RunConfig,
    pub data: DataConfig,
    pub noise: NoiseConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            data: DataConfig::default(),
            noise: NoiseConfig {
                kind: NoiseKind::Symmetric,
                superclass_size: 5,
                pairs: None,
            },
        }
    }
}

pub const KEYS: &[&str] = &[
    "seed",
    "mode",
    "tau",
    "noise",
    "superclass_size",
    "pairs",
    "t_k",
    "t_update",
    "c_restart",
    "lambda_start",
    "lambda_end",
    "rates_use_initial_tau",
    "tau_update_counts_changed",
    "stage1_epochs",
    "finetune_epochs",
    "batch_size",
    "lr_stage1",
    "lr_finetune_start",
    "adam_beta2",
    "hidden",
    "record_timing",
    "classes",
    "per_class",
    "dim",
    "separation",
    "spread",
    "test_fraction",
    "data",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse '{value}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn parse_pairs(value: &str) -> Result<Vec<(usize, usize)>> {
    value
        .split(',')
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| Error::config(format!("pairs: '{p}' is not src:dst")))?;
            Ok((parse_value("pairs", a.trim())?, parse_value("pairs", b.trim())?))
        })
        .collect()
}

impl HarnessConfig {
    /// Sets one key. Range checks happen in [`HarnessConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let run = &mut self.run;
        let s = &mut run.schedules;
        let d = &mut self.data;
        match key {
            "seed" => run.seed = parse_value(key, v)?,
            "mode" => run.mode = v.parse()?,
            "tau" => s.tau0 = parse_value(key, v)?,
            "noise" => self.noise.kind = v.parse()?,
            "superclass_size" => self.noise.superclass_size = parse_value(key, v)?,
            "pairs" => self.noise.pairs = Some(parse_pairs(v)?),
            "t_k" => s.t_k = parse_value(key, v)?,
            "t_update" => s.t_update = parse_value(key, v)?,
            "c_restart" => s.c_restart = parse_value(key, v)?,
            "lambda_start" => s.lambda_start = parse_value(key, v)?,
            "lambda_end" => s.lambda_end = parse_value(key, v)?,
            "rates_use_initial_tau" => s.rates_use_initial_tau = parse_value(key, v)?,
            "tau_update_counts_changed" => s.tau_update_counts_changed = parse_value(key, v)?,
            "stage1_epochs" => run.stage1_epochs = parse_value(key, v)?,
            "finetune_epochs" => run.finetune_epochs = parse_value(key, v)?,
            "batch_size" => run.batch_size = parse_value(key, v)?,
            "lr_stage1" => run.lr_stage1 = parse_value(key, v)?,
            "lr_finetune_start" => run.lr_finetune_start = parse_value(key, v)?,
            "adam_beta2" => run.adam_beta2 = parse_value(key, v)?,
            "hidden" => run.hidden = if v.is_empty() { Vec::new() } else { parse_list(key, v)? },
            "record_timing" => run.record_timing = parse_value(key, v)?,
            "classes" => d.classes = parse_value(key, v)?,
            "per_class" => d.per_class = parse_value(key, v)?,
            "dim" => d.dim = parse_value(key, v)?,
            "separation" => d.separation = parse_value(key, v)?,
            "spread" => d.spread = parse_value(key, v)?,
            "test_fraction" => d.test_fraction = parse_value(key, v)?,
            "data" => d.path = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            _ => return Err(Error::config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        let d = &self.data;
        if d.classes < 2 {
            return Err(Error::config("classes must be at least 2"));
        }
        if d.per_class == 0 {
            return Err(Error::config("per_class must be positive"));
        }
        if d.dim < 2 {
            return Err(Error::config("dim must be at least 2"));
        }
        if !(d.separation > 0.0) {
            return Err(Error::config("separation must be positive"));
        }
        if !(d.spread >= 0.0) {
            return Err(Error::config("spread must be non-negative"));
        }
        if !(d.test_fraction > 0.0 && d.test_fraction < 1.0) {
            return Err(Error::config("test_fraction out of (0,1)"));
        }
        if self.noise.superclass_size < 2 {
            return Err(Error::config("superclass_size must be at least 2"));
        }
        Ok(())
    }

    /// Every key with its resolved value, for the reproducibility header.
    pub fn to_json(&self) -> Value {
        let r = &self.run;
        let s = &r.schedules;
        let d = &self.data;
        let mut m = BTreeMap::new();
        m.insert("seed", json!(r.seed));
        m.insert("mode", json!(r.mode.as_str()));
        m.insert("tau", json!(s.tau0));
        m.insert("noise", json!(self.noise.kind.as_str()));
        m.insert("superclass_size", json!(self.noise.superclass_size));
        m.insert(
            "pairs",
            match &self.noise.pairs {
                Some(p) => json!(p.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(",")),
                None => Value::Null,
            },
        );
        m.insert("t_k", json!(s.t_k));
        m.insert("t_update", json!(s.t_update));
        m.insert("c_restart", json!(s.c_restart));
        m.insert("lambda_start", json!(s.lambda_start));
        m.insert("lambda_end", json!(s.lambda_end));
        m.insert("rates_use_initial_tau", json!(s.rates_use_initial_tau));
        m.insert("tau_update_counts_changed", json!(s.tau_update_counts_changed));
        m.insert("stage1_epochs", json!(r.stage1_epochs));
        m.insert("finetune_epochs", json!(r.finetune_epochs));
        m.insert("batch_size", json!(r.batch_size));
        m.insert("lr_stage1", json!(r.lr_stage1));
        m.insert("lr_finetune_start", json!(r.lr_finetune_start));
        m.insert("adam_beta2", json!(r.adam_beta2));
        m.insert("hidden", json!(r.hidden));
        m.insert("record_timing", json!(r.record_timing));
        m.insert("classes", json!(d.classes));
        m.insert("per_class", json!(d.per_class));
        m.insert("dim", json!(d.dim));
        m.insert("separation", json!(d.separation));
        m.insert("spread", json!(d.spread));
        m.insert("test_fraction", json!(d.test_fraction));
        m.insert("data", json!(d.path.as_ref().map(|p| p.display().to_string())));
        json!(m)
    }
}

/// Applies `key=value` lines from `text` on top of `base`.
pub fn apply_text(base: &mut HarnessConfig, text: &str) -> Result<()> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected key=value, got '{line}'"),
        })?;
        base.set(key.trim(), value)?;
    }
    Ok(())
}

/// Defaults, then the file (if any), then `overrides` in order; validated.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<HarnessConfig> {
    let mut cfg = HarnessConfig::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        apply_text(&mut cfg, &text)?;
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::Mode;

    fn from_text(text: &str, overrides: &[(&str, &str)]) -> Result<HarnessConfig> {
        let mut cfg = HarnessConfig::default();
        apply_text(&mut cfg, text)?;
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn flag_overrides_file() {
        let cfg = from_text("tau=0.5\n", &[("tau", "0.2")]).unwrap();
        assert_eq!(cfg.run.schedules.tau0, 0.2);
    }

    #[test]
    fn out_of_range_names_key() {
        let err = from_text("c_restart=1.5", &[]).unwrap_err();
        assert!(err.to_string().contains("c_restart out of [0,1]"), "{err}");
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(from_text("", &[]).unwrap(), HarnessConfig::default());
        assert_eq!(from_text("# only a comment\n\n", &[]).unwrap(), HarnessConfig::default());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = from_text("learning_rate=0.1", &[]).unwrap_err();
        assert!(err.to_string().contains("learning_rate"));
        assert!(from_text("just words", &[]).is_err());
    }

    #[test]
    fn comments_lists_and_pairs() {
        let cfg = from_text(
            "hidden = 32,16  # two layers\nnoise=pairmap\npairs=0:1,2:3\nmode=no_retrain_ablation\n",
            &[],
        )
        .unwrap();
        assert_eq!(cfg.run.hidden, vec![32, 16]);
        assert_eq!(cfg.noise.pairs, Some(vec![(0, 1), (2, 3)]));
        assert_eq!(cfg.run.mode, Mode::NoRetrainAblation);
        let q = cfg.noise.transition(10, 0.3).unwrap();
        assert!((q.matrix()[[0, 1]] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn every_key_is_settable_and_reported() {
        let header = HarnessConfig::default().to_json();
        let obj = header.as_object().unwrap();
        for k in KEYS {
            assert!(obj.contains_key(*k), "{k} missing from header");
        }
        assert_eq!(obj.len(), KEYS.len());
    }

    #[test]
    fn default_pairmap_needs_ten_classes() {
        let cfg = from_text("noise=pairmap", &[]).unwrap();
        assert!(cfg.noise.transition(10, 0.4).is_ok());
        assert!(cfg.noise.transition(6, 0.4).is_err());
    }
}
