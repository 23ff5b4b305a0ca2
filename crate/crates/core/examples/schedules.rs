//! Prints the per-epoch selection rate, the correction rate of each label
//! update with the resulting noise estimate, and the λ ramp, then shows which
//! examples a toy batch keeps and which labels a toy update rewrites.

use relabel::selection::{
    apply_correction, correction_rate, select_correction_set, selection_rate, small_loss_select, update_tau,
};
use relabel::trainer::{lambda_step, RunConfig, TwinState};

fn main() -> relabel::Result<()> {
    let cfg = RunConfig::default();
    let s = &cfg.schedules;

    println!("selection rate R(t), T_k={}, τ={}", s.t_k, s.tau0);
    for t in [0, 1, 2, 5, 8, 10, 20] {
        println!("  t={t:>2}  R={:.3}", selection_rate(t, s.t_k, s.tau0));
    }

    println!("\ncorrection rate C(k) with a running noise estimate (N=5000, half the set relabeled)");
    let mut tau = s.tau0;
    for k in 1..=5 {
        let c = correction_rate(k, tau)?;
        let corrected = (c * 5000.0 / 2.0) as usize;
        let next = update_tau(tau, corrected, 5000);
        println!(
            "  k={k}  C={c:.4}  retrain={}  τ {tau:.4} -> {next:.4}",
            if c > s.c_restart { "yes" } else { "no" }
        );
        tau = next;
    }

    println!("\nλ after each of {} planned updates", cfg.planned_corrections());
    let mut state = TwinState::new(&[2, 4, 2], &cfg)?;
    for k in 1..=cfg.planned_corrections() {
        state.k = k;
        lambda_step(&mut state, &cfg);
        println!("  k={k}  λ={:.3}", state.lambda_current);
    }

    let losses = [0.9, 0.1, 0.4, 0.1, 2.3, 0.7];
    let mask = small_loss_select(&losses, 0.5)?;
    println!("\nbatch losses {losses:?}\nkept at R=0.5: {mask:?}");

    let agr = [0.01, 0.02, 0.50, 0.03, 0.90, 0.04, 0.60, 0.70];
    let sup = [3.00, 0.10, 2.50, 4.00, 0.20, 0.30, 0.40, 0.50];
    let sets = select_correction_set(&agr, &sup, 0.25)?;
    let labels = [0, 1, 2, 0, 1, 2, 0, 1];
    let pred = [2, 1, 0, 1, 1, 2, 0, 1];
    let fix = apply_correction(&labels, &sets.correction, &pred, &pred)?;
    println!(
        "confident {:?}, noisy {:?}, correction {:?}\nlabels {labels:?} -> {:?}",
        sets.confident, sets.noisy, sets.correction, fix.labels
    );
    Ok(())
}
