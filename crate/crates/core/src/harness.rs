//! Command runner behind the `relabel` binary.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::HarnessConfig;
use crate::datasets::{gen_gaussian_blobs, load_csv, make_noisy_dataset, split, LabeledDataset, TestSet};
use crate::error::{Error, Result};
use crate::metrics::write_log;
use crate::rng::{derive_seed, STREAM_DATA, STREAM_NOISE, STREAM_SPLIT};
use crate::trainer::{run_experiment, Mode};

/// Which mechanism an `ablate` run isolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    /// Interval label updates vs. updating every epoch.
    Interval,
    /// Retraining after large corrections vs. continuing training.
    Retrain,
}

impl Ablation {
    pub fn mode(self) -> Mode {
        match self {
            Ablation::Interval => Mode::ContinuousUpdateAblation,
            Ablation::Retrain => Mode::NoRetrainAblation,
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(Ablation::Interval),
            "retrain" => Ok(Ablation::Retrain),
            _ => Err(Error::config(format!("ablation '{s}' is not one of interval, retrain"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Baseline,
    Ablate(Ablation),
    GenData,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Baseline => "baseline",
            Command::Ablate(_) => "ablate",
            Command::GenData => "gen-data",
        }
    }
}

/// The full noisy dataset: loaded from CSV when `data` is set, otherwise
/// generated as blobs and corrupted with the configured noise.
pub fn build_dataset(cfg: &HarnessConfig) -> Result<LabeledDataset> {
    if let Some(path) = &cfg.data.path {
        return load_csv(path);
    }
    let seed = cfg.run.seed;
    let d = &cfg.data;
    let (x, y) = gen_gaussian_blobs(
        d.classes,
        d.per_class,
        d.dim,
        d.separation,
        d.spread,
        derive_seed(seed, &[STREAM_DATA]),
    )?;
    let q = cfg.noise.transition(d.classes, cfg.run.schedules.tau0)?;
    make_noisy_dataset(x, y, &q, derive_seed(seed, &[STREAM_NOISE]))
}

/// Builds the dataset and splits off the clean-labelled test side.
pub fn prepare_data(cfg: &HarnessConfig) -> Result<(LabeledDataset, TestSet)> {
    let full = build_dataset(cfg)?;
    split(&full, cfg.data.test_fraction, derive_seed(cfg.run.seed, &[STREAM_SPLIT]))
}

/// First line of every metrics file.
pub fn run_header(cfg: &HarnessConfig, command: Command, mode: Mode) -> Value {
    let mut config = cfg.to_json();
    config["mode"] = json!(mode.as_str());
    json!({
        "command": command.name(),
        "config": config,
        "seed": cfg.run.seed,
    })
}

/// `runs/out.jsonl` + `method` -> `runs/out.method.jsonl`.
pub fn tagged_path(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    out.with_file_name(name)
}

fn run_mode(cfg: &HarnessConfig, command: Command, mode: Mode, train: &LabeledDataset, test: &TestSet, out: &Path) -> Result<()> {
    let mut run = cfg.run.clone();
    run.mode = mode;
    let records = run_experiment(&run, train, test)?;
    write_log(Some(&run_header(cfg, command, mode)), &records, out)
}

/// Executes `command` and returns the paths written.
pub fn run(command: Command, cfg: &HarnessConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    match command {
        Command::GenData => {
            build_dataset(cfg)?.write_csv(out)?;
            Ok(vec![out.to_path_buf()])
        }
        Command::Train => {
            let (train, test) = prepare_data(cfg)?;
            run_mode(cfg, command, cfg.run.mode, &train, &test, out)?;
            Ok(vec![out.to_path_buf()])
        }
        Command::Baseline => {
            let mode = match cfg.run.mode {
                m @ (Mode::StandardBaseline | Mode::JointOnlyBaseline) => m,
                _ => Mode::StandardBaseline,
            };
            let (train, test) = prepare_data(cfg)?;
            run_mode(cfg, command, mode, &train, &test, out)?;
            Ok(vec![out.to_path_buf()])
        }
        Command::Ablate(which) => {
            let (train, test) = prepare_data(cfg)?;
            let mut written = Vec::new();
            for mode in [Mode::Method, which.mode()] {
                let path = tagged_path(out, mode.as_str());
                run_mode(cfg, command, mode, &train, &test, &path)?;
                written.push(path);
            }
            Ok(written)
        }
    }
}
