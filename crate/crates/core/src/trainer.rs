//! Two-stage training pipeline.
//!
//! Stage one alternates between updating both networks with the joint loss
//! on small-loss examples (labels fixed) and rewriting labels the two
//! networks confidently agree on (networks fixed). Large label updates
//! trigger retraining from scratch. Stage two fine-tunes with frozen labels
//! and a learning rate decaying linearly to zero.

use std::time::Instant;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::backbone::{
    adam_step, argmax_rows, backprop, forward, init_params, predict_proba, AdamState, NetParams,
};
use crate::datasets::{LabeledDataset, TestSet};
use crate::error::{Error, Result};
use crate::losses::{cross_entropy_grad, joint_loss_grad, joint_losses};
use crate::metrics::{MetricsRecord, Stage};
use crate::rng::{derive_seed, rng_from, STREAM_INIT, STREAM_SHUFFLE};
use crate::selection::{
    apply_correction, correction_rate, select_correction_set, selection_rate, small_loss_select,
    update_tau, CorrectionOutcome, Schedules,
};

/// Which pipeline `run_experiment` executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Joint training with small-loss selection and interval label correction.
    Method,
    /// One network, plain cross-entropy on every example.
    StandardBaseline,
    /// Joint training with small-loss selection, labels never corrected.
    JointOnlyBaseline,
    /// Label correction every epoch after a warm-up.
    ContinuousUpdateAblation,
    /// Interval correction without retraining from scratch.
    NoRetrainAblation,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Method,
        Mode::StandardBaseline,
        Mode::JointOnlyBaseline,
        Mode::ContinuousUpdateAblation,
        Mode::NoRetrainAblation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Method => "method",
            Mode::StandardBaseline => "standard_baseline",
            Mode::JointOnlyBaseline => "joint_only_baseline",
            Mode::ContinuousUpdateAblation => "continuous_update_ablation",
            Mode::NoRetrainAblation => "no_retrain_ablation",
        }
    }

    fn single_network(self) -> bool {
        self == Mode::StandardBaseline
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config(format!("mode '{s}' is not one of method, standard_baseline, joint_only_baseline, continuous_update_ablation, no_retrain_ablation")))
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything `run_experiment` needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schedules: Schedules,
    /// Hidden layer widths; input and output widths come from the data.
    pub hidden: Vec<usize>,
    pub stage1_epochs: u32,
    pub finetune_epochs: u32,
    pub batch_size: usize,
    pub lr_stage1: f64,
    pub lr_finetune_start: f64,
    pub adam_beta2: f64,
    pub mode: Mode,
    pub seed: u64,
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedules: Schedules::default(),
            hidden: vec![64],
            stage1_epochs: 60,
            finetune_epochs: 20,
            batch_size: 128,
            lr_stage1: 1e-3,
            lr_finetune_start: 1e-3,
            adam_beta2: 0.999,
            mode: Mode::Method,
            seed: 0,
            record_timing: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedules.validate()?;
        if self.stage1_epochs == 0 {
            return Err(Error::config("stage1_epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::config("hidden widths must be positive"));
        }
        for (name, v) in [("lr_stage1", self.lr_stage1), ("lr_finetune_start", self.lr_finetune_start)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a positive real")));
            }
        }
        if !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::config("adam_beta2 out of [0,1)"));
        }
        Ok(())
    }

    pub fn layer_dims(&self, input_dim: usize, num_classes: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(&self.hidden);
        dims.push(num_classes);
        dims
    }

    /// Number of label-update events the λ schedule is spread over.
    pub fn planned_corrections(&self) -> u32 {
        let t_update = self.schedules.t_update;
        let planned = match self.mode {
            Mode::ContinuousUpdateAblation => (self.stage1_epochs + 1).saturating_sub(t_update),
            _ => self.stage1_epochs / t_update,
        };
        planned.max(1)
    }

    fn rate_tau(&self, state: &TwinState) -> f64 {
        if self.schedules.rates_use_initial_tau {
            self.schedules.tau0
        } else {
            state.tau_current
        }
    }
}

/// Both networks, their optimizers, and the schedule counters.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinState {
    pub params1: NetParams,
    pub params2: NetParams,
    pub adam1: AdamState,
    pub adam2: AdamState,
    /// Epochs since the networks were last initialized; drives the selection ramp.
    pub epoch: u32,
    /// Label-update events so far.
    pub k: u32,
    pub tau_current: f64,
    pub lambda_current: f64,
    /// Number of times the networks have been re-initialized.
    pub generation: u32,
    /// Epochs trained in total, across retrains and stages.
    pub epochs_run: u32,
}

impl TwinState {
    pub fn new(layer_dims: &[usize], config: &RunConfig) -> Result<Self> {
        let (params1, params2) = fresh_pair(layer_dims, config.seed, 0)?;
        Ok(Self {
            adam1: adam_for(&params1, config),
            adam2: adam_for(&params2, config),
            params1,
            params2,
            epoch: 0,
            k: 0,
            tau_current: config.schedules.tau0,
            lambda_current: config.schedules.lambda_start,
            generation: 0,
            epochs_run: 0,
        })
    }

    pub fn for_dataset(dataset: &LabeledDataset, config: &RunConfig) -> Result<Self> {
        Self::new(&config.layer_dims(dataset.dim(), dataset.num_classes()), config)
    }
}

fn adam_for(params: &NetParams, config: &RunConfig) -> AdamState {
    AdamState::with_betas(params, 0.9, config.adam_beta2, 1e-8)
}

fn fresh_pair(layer_dims: &[usize], seed: u64, generation: u32) -> Result<(NetParams, NetParams)> {
    let s1 = derive_seed(seed, &[STREAM_INIT, generation as u64, 1]);
    let s2 = derive_seed(seed, &[STREAM_INIT, generation as u64, 2]);
    Ok((init_params(layer_dims, s1)?, init_params(layer_dims, s2)?))
}

/// Per-epoch knobs that differ between the two stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSettings {
    pub lr: f64,
    pub lambda: f64,
    /// Fraction of each mini-batch kept for the update.
    pub keep_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Mean per-example training loss, measured before each batch's update
    /// (joint loss for two networks, cross-entropy for one).
    pub mean_loss: f64,
    pub selected_fraction: f64,
}

/// One stage-one epoch: flat learning rate, current λ, selection rate `R(t)`.
pub fn train_epoch(state: &mut TwinState, dataset: &LabeledDataset, config: &RunConfig) -> Result<EpochStats> {
    let settings = EpochSettings {
        lr: config.lr_stage1,
        lambda: state.lambda_current,
        keep_rate: selection_rate(state.epoch, config.schedules.t_k, config.rate_tau(state)),
    };
    run_epoch(state, dataset, config, settings)
}

/// One pass over the shuffled training set with explicit settings.
pub fn run_epoch(
    state: &mut TwinState,
    dataset: &LabeledDataset,
    config: &RunConfig,
    settings: EpochSettings,
) -> Result<EpochStats> {
    if dataset.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    let shuffle_seed = derive_seed(
        config.seed,
        &[STREAM_SHUFFLE, state.epochs_run as u64, state.generation as u64],
    );
    order.shuffle(&mut rng_from(shuffle_seed));

    let features = dataset.features();
    let labels = dataset.current_labels();
    let mut loss_sum = 0.0;
    let mut selected = 0usize;
    for (batch_no, idx) in order.chunks(config.batch_size).enumerate() {
        let x = features.select(Axis(0), idx);
        let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        let tag = |e: Error| match e {
            Error::Numeric { layer, .. } => Error::Numeric {
                layer,
                batch: Some(batch_no),
            },
            other => other,
        };
        if config.mode.single_network() {
            let (p, cache) = forward(&state.params1, x.view())?;
            let (loss, d) = cross_entropy_grad(&p, &y)?;
            loss_sum += loss * y.len() as f64;
            selected += y.len();
            let g = backprop(&state.params1, &cache, &d)?;
            adam_step(&mut state.params1, &g, &mut state.adam1, settings.lr).map_err(tag)?;
        } else {
            let (p1, c1) = forward(&state.params1, x.view())?;
            let (p2, c2) = forward(&state.params2, x.view())?;
            let losses = joint_losses(&p1, &p2, &y, settings.lambda)?;
            loss_sum += losses.joint.sum();
            let joint = losses.joint.to_vec();
            let mask = small_loss_select(&joint, settings.keep_rate)?;
            selected += mask.iter().filter(|&&m| m).count();
            let (d1, d2) = joint_loss_grad(&p1, &p2, &y, settings.lambda, &mask)?;
            let g1 = backprop(&state.params1, &c1, &d1)?;
            let g2 = backprop(&state.params2, &c2, &d2)?;
            adam_step(&mut state.params1, &g1, &mut state.adam1, settings.lr).map_err(tag)?;
            adam_step(&mut state.params2, &g2, &mut state.adam2, settings.lr).map_err(tag)?;
        }
    }
    state.epoch += 1;
    state.epochs_run += 1;
    Ok(EpochStats {
        mean_loss: loss_sum / n as f64,
        selected_fraction: selected as f64 / n as f64,
    })
}

/// Label update with the networks fixed. Evaluates both networks on the
/// whole training set, picks the correction set at rate `C(k+1)`, rewrites
/// agreed labels and lowers the noise estimate.
pub fn correction_step(
    state: &mut TwinState,
    dataset: &mut LabeledDataset,
    config: &RunConfig,
) -> Result<CorrectionOutcome> {
    let rate = if config.mode == Mode::JointOnlyBaseline {
        0.0
    } else {
        correction_rate(state.k + 1, config.rate_tau(state))?.clamp(0.0, 1.0)
    };
    let features = dataset.features().view();
    let p1 = predict_proba(&state.params1, features)?;
    let p2 = predict_proba(&state.params2, features)?;
    let losses = joint_losses(&p1, &p2, dataset.current_labels(), state.lambda_current)?;
    let sets = select_correction_set(
        losses.agr.as_slice().unwrap(),
        losses.sup.as_slice().unwrap(),
        rate,
    )?;
    let relabel = apply_correction(
        dataset.current_labels(),
        &sets.correction,
        &argmax_rows(&p1),
        &argmax_rows(&p2),
    )?;
    let decrement = if config.schedules.tau_update_counts_changed {
        relabel.changed.len()
    } else {
        sets.correction.len()
    };
    let new_tau = update_tau(state.tau_current, decrement, dataset.len());
    dataset.set_current_labels(relabel.labels.clone());
    state.k += 1;
    state.tau_current = new_tau;
    Ok(CorrectionOutcome {
        correction_set: sets.correction,
        changed: relabel.changed,
        new_tau,
        new_labels: relabel.labels,
        rate,
    })
}

/// Re-initializes both networks when the correction rate just used exceeds
/// the restart threshold. Returns whether that happened. Labels are untouched.
pub fn maybe_retrain(state: &mut TwinState, correction_rate_used: f64, config: &RunConfig) -> Result<bool> {
    if config.mode == Mode::NoRetrainAblation || correction_rate_used <= config.schedules.c_restart {
        return Ok(false);
    }
    let generation = state.generation + 1;
    let dims = state.params1.layer_dims().to_vec();
    let (p1, p2) = fresh_pair(&dims, derive_seed(config.seed, &[state.k as u64]), generation)?;
    state.adam1 = adam_for(&p1, config);
    state.adam2 = adam_for(&p2, config);
    state.params1 = p1;
    state.params2 = p2;
    state.epoch = 0;
    state.generation = generation;
    Ok(true)
}

/// `λ = max(lambda_end, lambda_start - k * Δ)` with Δ spreading the drop over
/// the planned number of label updates.
pub fn lambda_step(state: &mut TwinState, config: &RunConfig) {
    let s = &config.schedules;
    let delta = (s.lambda_start - s.lambda_end) / config.planned_corrections() as f64;
    state.lambda_current = (s.lambda_start - state.k as f64 * delta).max(s.lambda_end);
}

/// Learning rate for fine-tuning epoch `e` of `total`: `start * (total - e) / total`.
pub fn finetune_lr(e: u32, total: u32, start: f64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    start * (total - e.min(total)) as f64 / total as f64
}

/// Stage two: labels frozen, λ at `lambda_end`, keep rate `1 - τ`, linearly
/// decaying learning rate. `on_epoch` sees the state after every epoch.
pub fn fine_tune_with(
    state: &mut TwinState,
    dataset: &LabeledDataset,
    config: &RunConfig,
    mut on_epoch: impl FnMut(u32, &TwinState) -> Result<()>,
) -> Result<()> {
    let total = config.finetune_epochs;
    state.lambda_current = config.schedules.lambda_end;
    for e in 0..total {
        let settings = EpochSettings {
            lr: finetune_lr(e, total, config.lr_finetune_start),
            lambda: config.schedules.lambda_end,
            keep_rate: 1.0 - config.rate_tau(state),
        };
        run_epoch(state, dataset, config, settings)?;
        on_epoch(e + 1, state)?;
    }
    Ok(())
}

pub fn fine_tune(state: &mut TwinState, dataset: &LabeledDataset, config: &RunConfig) -> Result<()> {
    fine_tune_with(state, dataset, config, |_, _| Ok(()))
}

/// Test-set accuracy of both networks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub acc1: f64,
    pub acc2: f64,
    pub mean_acc: f64,
    /// Fraction of test points where the two argmax predictions differ.
    pub disagreement_rate: f64,
}

pub fn evaluate(state: &TwinState, features: ArrayView2<'_, f64>, labels: &[usize]) -> Result<Evaluation> {
    if labels.is_empty() || features.nrows() != labels.len() {
        return Err(Error::dim(format!(
            "{} test rows and {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    let pred1 = argmax_rows(&predict_proba(&state.params1, features)?);
    let pred2 = argmax_rows(&predict_proba(&state.params2, features)?);
    let n = labels.len() as f64;
    let hits = |pred: &[usize]| pred.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / n;
    let acc1 = hits(&pred1);
    let acc2 = hits(&pred2);
    let disagree = pred1.iter().zip(&pred2).filter(|(a, b)| a != b).count() as f64 / n;
    Ok(Evaluation {
        acc1,
        acc2,
        mean_acc: 0.5 * (acc1 + acc2),
        disagreement_rate: disagree,
    })
}

struct Recorder<'a> {
    config: &'a RunConfig,
    test: &'a TestSet,
    started: Instant,
    records: Vec<MetricsRecord>,
}

impl Recorder<'_> {
    fn push(
        &mut self,
        stage: Stage,
        epoch: u32,
        state: &TwinState,
        dataset: &LabeledDataset,
        corrected: usize,
        retrained: bool,
    ) -> Result<()> {
        let single = self.config.mode.single_network();
        let ev = evaluate(state, self.test.features.view(), &self.test.labels)?;
        self.records.push(MetricsRecord {
            epoch,
            stage,
            mode: self.config.mode,
            k: state.k,
            tau_est: state.tau_current,
            lambda: (!single).then_some(state.lambda_current),
            acc1: ev.acc1,
            acc2: (!single).then_some(ev.acc2),
            mean_acc: if single { ev.acc1 } else { ev.mean_acc },
            disagreement_rate: (!single).then_some(ev.disagreement_rate),
            label_acc: dataset.label_accuracy(),
            num_corrected_this_event: corrected,
            retrained,
            wall_ms: self
                .config
                .record_timing
                .then(|| self.started.elapsed().as_millis() as u64),
        });
        Ok(())
    }
}

/// Runs the configured mode end to end on a copy of `train`.
pub fn run_experiment(config: &RunConfig, train: &LabeledDataset, test: &TestSet) -> Result<Vec<MetricsRecord>> {
    let mut dataset = train.clone();
    run_experiment_on(config, &mut dataset, test)
}

/// Like [`run_experiment`] but leaves the corrected labels in `dataset`.
pub fn run_experiment_on(
    config: &RunConfig,
    dataset: &mut LabeledDataset,
    test: &TestSet,
) -> Result<Vec<MetricsRecord>> {
    config.validate()?;
    if test.features.ncols() != dataset.dim() {
        return Err(Error::dim("test features do not match training width"));
    }
    let mut state = TwinState::for_dataset(dataset, config)?;
    let mut rec = Recorder {
        config,
        test,
        started: Instant::now(),
        records: Vec::new(),
    };
    let t_update = config.schedules.t_update;

    for e in 1..=config.stage1_epochs {
        train_epoch(&mut state, dataset, config)?;
        let update_now = match config.mode {
            Mode::StandardBaseline => false,
            Mode::ContinuousUpdateAblation => e >= t_update,
            Mode::Method | Mode::JointOnlyBaseline | Mode::NoRetrainAblation => e % t_update == 0,
        };
        let mut corrected = 0;
        let mut retrained = false;
        if update_now {
            let outcome = correction_step(&mut state, dataset, config)?;
            corrected = outcome.changed.len();
            lambda_step(&mut state, config);
            // The continuous ablation retrains only after its first update.
            let may_restart = config.mode != Mode::ContinuousUpdateAblation || state.k == 1;
            if may_restart {
                retrained = maybe_retrain(&mut state, outcome.rate, config)?;
            }
        }
        rec.push(Stage::Iterative, e, &state, dataset, corrected, retrained)?;
    }

    let frozen = dataset.clone();
    fine_tune_with(&mut state, &frozen, config, |e, st| {
        rec.push(Stage::Finetune, e, st, &frozen, 0, false)
    })?;
    Ok(rec.records)
}
