//! Finite-difference check of the joint-loss backward pass on a tiny pair of
//! networks. Prints the analytic and numeric derivative for a few parameters
//! and the worst relative error over all of them.
//!
//!     cargo run --example gradient_check -- [lambda]

use ndarray::array;
use relabel::backbone::{backprop, forward, init_params, NetParams};
use relabel::losses::{joint_loss_grad, joint_losses};

fn mean_joint(a: &NetParams, b: &NetParams, x: &ndarray::Array2<f64>, y: &[usize], lambda: f64) -> f64 {
    let (p1, _) = forward(a, x.view()).unwrap();
    let (p2, _) = forward(b, x.view()).unwrap();
    joint_losses(&p1, &p2, y, lambda).unwrap().joint.mean().unwrap()
}

fn main() -> relabel::Result<()> {
    let lambda: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let dims = [3, 6, 4];
    let mut a = init_params(&dims, 1)?;
    let b = init_params(&dims, 2)?;
    let x = array![[0.5, -1.0, 2.0], [1.5, 0.2, -0.3], [-0.7, 0.9, 0.1]];
    let y = [0, 3, 2];

    let (p1, c1) = forward(&a, x.view())?;
    let (p2, _) = forward(&b, x.view())?;
    let (d1, _) = joint_loss_grad(&p1, &p2, &y, lambda, &[true; 3])?;
    let grads = backprop(&a, &c1, &d1)?.to_flat();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    println!("λ = {lambda}, {} parameters in network 1", a.num_params());
    println!("{:>5} {:>14} {:>14} {:>10}", "index", "backprop", "numeric", "rel err");
    for (i, &g) in grads.iter().enumerate() {
        let orig = a.get_flat(i);
        a.set_flat(i, orig + h);
        let up = mean_joint(&a, &b, &x, &y, lambda);
        a.set_flat(i, orig - h);
        let down = mean_joint(&a, &b, &x, &y, lambda);
        a.set_flat(i, orig);
        let numeric = (up - down) / (2.0 * h);
        let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
        if i % 8 == 0 {
            println!("{i:>5} {g:>14.8} {numeric:>14.8} {rel:>10.2e}");
        }
    }
    println!("worst relative error: {worst:.2e}");
    Ok(())
}
