//! The same random instance stabilized under every scheduling policy gives
//! one odometer and one final configuration.
//!
//! Run with `cargo run --release --example abelian_policies -- [seed]`.

use arw::{sample_bernoulli_config, stabilize, HashedStacks, Interval, Policy};

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let half = 40;
    let stacks = HashedStacks::new(seed, 1.0);
    let sigma = sample_bernoulli_config(0.6, Interval::new(-half, half), seed ^ 1).unwrap();
    let set = Interval::centered(half);

    let policies = [
        Policy::Sweep,
        Policy::RightmostFirst,
        Policy::RandomActive { seed: 3 },
        Policy::Queue,
    ];
    let runs: Vec<_> = policies
        .iter()
        .map(|&p| stabilize(&sigma, set, &stacks, p, 1 << 32).unwrap())
        .collect();
    for (p, r) in policies.iter().zip(&runs) {
        println!(
            "{:<10} topplings {:>6}  m(0) {:>4}  left behind {:>3}  exited {}+{}",
            p.name(),
            r.topple_count,
            r.odometer.get(0),
            r.remaining(),
            r.exited_left,
            r.exited_right
        );
    }
    let same = runs
        .windows(2)
        .all(|w| w[0].odometer == w[1].odometer && w[0].final_config == w[1].final_config);
    println!("identical: {same}");
}
