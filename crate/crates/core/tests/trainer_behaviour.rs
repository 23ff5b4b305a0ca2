use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relabel::backbone::predict_proba;
use relabel::datasets::{gen_gaussian_blobs, make_noisy_dataset, split, LabeledDataset};
use relabel::losses::joint_losses;
use relabel::noise::symmetric_q;
use relabel::selection::{apply_correction, select_correction_set, Schedules};
use relabel::trainer::{
    correction_step, evaluate, finetune_lr, lambda_step, maybe_retrain, run_experiment_on, train_epoch, Mode,
    RunConfig, TwinState,
};

fn small_run(mode: Mode, tau: f64, seed: u64) -> RunConfig {
    RunConfig {
        schedules: Schedules {
            tau0: tau,
            t_k: 3,
            t_update: 4,
            ..Schedules::default()
        },
        hidden: vec![32],
        stage1_epochs: 12,
        finetune_epochs: 4,
        batch_size: 64,
        mode,
        seed,
        ..RunConfig::default()
    }
}

fn blobs(tau: f64, seed: u64) -> (LabeledDataset, relabel::datasets::TestSet) {
    let (x, y) = gen_gaussian_blobs(5, 120, 8, 6.0, 1.0, seed).unwrap();
    let ds = make_noisy_dataset(x, y, &symmetric_q(5, tau).unwrap(), seed + 1).unwrap();
    split(&ds, 0.25, seed + 2).unwrap()
}

fn full_joint_loss(state: &TwinState, ds: &LabeledDataset, lambda: f64) -> f64 {
    let p1 = predict_proba(&state.params1, ds.features().view()).unwrap();
    let p2 = predict_proba(&state.params2, ds.features().view()).unwrap();
    joint_losses(&p1, &p2, ds.current_labels(), lambda).unwrap().joint.mean().unwrap()
}

#[test]
fn clean_data_yields_no_label_changes() {
    for seed in 0..3 {
        let (mut train, test) = blobs(0.0, seed);
        let before = train.current_labels().to_vec();
        let records = run_experiment_on(&small_run(Mode::Method, 0.0, seed), &mut train, &test).unwrap();
        assert_eq!(train.current_labels(), &before[..]);
        assert!(records.iter().all(|r| r.num_corrected_this_event == 0 && !r.retrained));
        assert!(records.iter().all(|r| r.tau_est == 0.0));
    }
}

#[test]
fn untrained_networks_are_at_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 4000;
    let x = Array2::from_shape_fn((n, 20), |_| rng.random_range(-1.0..1.0));
    let y: Vec<usize> = (0..n).map(|i| i % 10).collect();
    let ds = LabeledDataset::new(x.clone(), y.clone(), None, 10).unwrap();
    let state = TwinState::for_dataset(&ds, &RunConfig::default()).unwrap();
    let ev = evaluate(&state, x.view(), &y).unwrap();
    assert!((ev.mean_acc - 0.1).abs() < 0.03, "accuracy {}", ev.mean_acc);
}

#[test]
fn one_epoch_lowers_the_training_loss() {
    let (train, _) = blobs(0.2, 5);
    let cfg = small_run(Mode::Method, 0.2, 5);
    let mut state = TwinState::for_dataset(&train, &cfg).unwrap();
    let lambda = state.lambda_current;
    let before = full_joint_loss(&state, &train, lambda);
    train_epoch(&mut state, &train, &cfg).unwrap();
    let after = full_joint_loss(&state, &train, lambda);
    assert!(after < before, "{before} -> {after}");
    assert_eq!(state.epoch, 1);
}

#[test]
fn correction_step_after_training_improves_labels() {
    let (mut train, _) = blobs(0.4, 8);
    let cfg = RunConfig {
        batch_size: 16,
        lr_stage1: 3e-3,
        ..small_run(Mode::Method, 0.4, 8)
    };
    let mut state = TwinState::for_dataset(&train, &cfg).unwrap();
    for _ in 0..15 {
        train_epoch(&mut state, &train, &cfg).unwrap();
    }
    let before = train.label_accuracy().unwrap();
    let out = correction_step(&mut state, &mut train, &cfg).unwrap();
    assert!((out.rate - 0.2).abs() < 1e-12);
    assert_eq!(state.k, 1);
    let clean = train.clean_labels().unwrap().to_vec();
    let fixed = out.changed.iter().filter(|&&i| out.new_labels[i] == clean[i]).count();
    assert!(!out.changed.is_empty());
    assert!(fixed as f64 >= 0.9 * out.changed.len() as f64, "{fixed} of {} changes were fixes", out.changed.len());
    assert!(train.label_accuracy().unwrap() > before);
    assert!(out.new_tau < 0.4);
}

#[test]
fn retrain_resets_networks_and_ramp() {
    let (train, _) = blobs(0.5, 1);
    let cfg = small_run(Mode::Method, 0.5, 1);
    let mut state = TwinState::for_dataset(&train, &cfg).unwrap();
    train_epoch(&mut state, &train, &cfg).unwrap();
    let trained = state.params1.clone();
    state.k = 1;
    assert!(!maybe_retrain(&mut state, 0.05, &cfg).unwrap());
    assert!(maybe_retrain(&mut state, 0.25, &cfg).unwrap());
    assert_eq!(state.epoch, 0);
    assert_eq!(state.generation, 1);
    assert_eq!(state.adam1.step(), 0);
    assert_ne!(state.params1, trained);

    let no_retrain = RunConfig {
        mode: Mode::NoRetrainAblation,
        ..cfg
    };
    assert!(!maybe_retrain(&mut state, 0.25, &no_retrain).unwrap());
}

#[test]
fn lambda_and_finetune_schedules() {
    let cfg = RunConfig::default();
    let (train, _) = blobs(0.5, 1);
    let mut state = TwinState::for_dataset(&train, &cfg).unwrap();
    let planned = cfg.planned_corrections();
    for k in 1..=planned + 2 {
        state.k = k;
        lambda_step(&mut state, &cfg);
        let expected = (0.9 - k as f64 * 0.2 / planned as f64).max(0.7);
        assert!((state.lambda_current - expected).abs() < 1e-12);
    }
    assert!((state.lambda_current - 0.7).abs() < 1e-12);
    assert_eq!(finetune_lr(0, 20, 1e-3), 1e-3);
    assert!((finetune_lr(10, 20, 1e-3) - 5e-4).abs() < 1e-18);
    assert_eq!(finetune_lr(20, 20, 1e-3), 0.0);
}

proptest! {
    #[test]
    fn agreeing_on_clean_labels_never_hurts(
        seed in any::<u64>(),
        n in 1usize..300,
        rate in 0.0f64..0.5,
        c in 2usize..8,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clean: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let noisy: Vec<usize> = clean.iter().map(|&y| if rng.random_bool(0.4) { rng.random_range(0..c) } else { y }).collect();
        let agr: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let sup: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let sets = select_correction_set(&agr, &sup, rate).unwrap();
        let out = apply_correction(&noisy, &sets.correction, &clean, &clean).unwrap();
        let acc = |l: &[usize]| l.iter().zip(&clean).filter(|(a, b)| a == b).count();
        prop_assert!(acc(&out.labels) >= acc(&noisy));
        for &i in &out.changed {
            prop_assert_eq!(out.labels[i], clean[i]);
        }
    }
}
