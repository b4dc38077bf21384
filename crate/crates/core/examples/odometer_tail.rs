//! Tail of the odometer at the origin in the subcritical phase and its
//! stretched-exponential fit `P(m(0) >= n) ~ exp(-c n^slope)`.
//!
//! Run with `cargo run --release --example odometer_tail -- [replicas]`.

use arw::experiments::{
    fit_stretched_exponential, log_grid, mean_odometer, tail_experiment, TailParams,
};

fn main() {
    let replicas: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);
    let (lambda, rho, half) = (1.0, 0.45, 1000);
    let run = tail_experiment(&TailParams::new(
        lambda,
        rho,
        half,
        log_grid(10, 10_000, 25),
        replicas,
        9,
    ))
    .unwrap();
    for (n, s) in run.estimate.n_grid.iter().zip(&run.estimate.survival) {
        if *s > 0.0 {
            println!("P(m(0) >= {n:>5}) = {s:.5}");
        }
    }
    match fit_stretched_exponential(&run.estimate, None) {
        Ok(f) => println!(
            "slope {:.3}, c {:.3}, r2 {:.4} over {} points",
            f.slope, f.c_hat, f.r2, f.points
        ),
        Err(e) => println!("no fit: {e}"),
    }

    // one seed for both windows: replicas share stacks and particles, so equal
    // means say the window is already large enough
    for n in [half, 2 * half] {
        let m = mean_odometer(lambda, rho, n, replicas / 4, 10).unwrap();
        let (lo, hi) = m.estimate.ci95();
        println!(
            "N = {n}: mean m(0) {:.4} in [{lo:.4}, {hi:.4}], tail sum {:.4}",
            m.estimate.mean, m.tail_sum
        );
    }
}
