//! Minimal extended odometer from a large value at the origin: its Right
//! counts decay like `n^2 - rho j^2 / 2`.
//!
//! Run with `cargo run --release --example minimal_odometer`.

use arw::extended::Problem;
use arw::{sample_bernoulli_config, HashedStacks, Interval};

fn main() {
    let (lambda, rho, n) = (1.0, 0.2, 100i64);
    let u0 = (3.0 * (1.0 + lambda) * (n * n) as f64) as i64;
    let len = 4 * n;
    let stacks = HashedStacks::new(11, lambda);
    let sigma = sample_bernoulli_config(rho, Interval::new(1, len - 1), 12).unwrap();

    let (m, right) = Problem::new(&sigma, u0, 0, len as usize, &stacks)
        .minimal_with_right_counts()
        .unwrap();
    println!("u0 = {u0}, flow = {}", m.flow(&stacks));
    println!(
        "{:>5} {:>9} {:>10} {:>12}",
        "j", "m(j)", "NR(j)", "n^2-rho*j^2/2"
    );
    for j in (0..=len).step_by(25) {
        let bound = (n * n) as f64 - rho * (j * j) as f64 / 2.0;
        println!(
            "{j:>5} {:>9} {:>10} {bound:>12.0}",
            m.get(j),
            right[j as usize]
        );
    }
}
