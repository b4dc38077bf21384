//! Stabilizes two particles on three sites with hand-written stacks and
//! checks the result against the mass-balance equation.
//!
//! Run with `cargo run --example worked_example`.

use arw::{
    is_stable_on, mass_balance_residual, stabilize, Configuration, FixtureStacks, HashedStacks,
    Instruction::*, Interval, Policy,
};

fn main() {
    // stack(0) = [R, ...], stack(1) = [S, R, S, ...], stack(2) = [S, ...]
    let stacks = FixtureStacks::new(HashedStacks::new(1, 1.0))
        .with_forward(0, &[Right])
        .with_forward(1, &[Sleep, Right, Sleep])
        .with_forward(2, &[Sleep]);
    let set = Interval::new(0, 2);
    let sigma = Configuration::from_active_sites(set, &[0, 1]);

    let r = stabilize(&sigma, set, &stacks, Policy::default(), 100).expect("finite");
    println!("odometer   {:?}", r.odometer.values());
    println!(
        "sleepers   {:?}",
        r.final_config.sleeping_sites().collect::<Vec<_>>()
    );
    println!("topplings  {}", r.topple_count);
    for v in set.sites() {
        println!(
            "residual at {v}: {}",
            mass_balance_residual(&r.odometer, &sigma, &stacks, v)
        );
    }
    assert!(is_stable_on(&r.odometer, &sigma, &stacks, set));
}
