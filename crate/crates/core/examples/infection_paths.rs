//! Enumerates the stable extended odometers of a tiny instance and groups
//! them by infection path. Members sharing a path only differ inside runs of
//! Sleep instructions.
//!
//! Run with `cargo run --example infection_paths`.

use std::collections::BTreeMap;

use arw::{enumerate_stable_extended, to_infection_path, Configuration, HashedStacks, Interval};

fn main() {
    let stacks = HashedStacks::new(4, 1.0);
    let sigma = Configuration::from_active_sites(Interval::new(1, 2), &[1, 2]);
    let e = enumerate_stable_extended(&sigma, 3, 0, 3, 6, &stacks).unwrap();
    println!("minimal odometer {:?}", e.minimal.values());
    println!("{} members (truncated: {})", e.members.len(), e.truncated);

    let mut by_path: BTreeMap<Vec<(i64, u64)>, Vec<Vec<i64>>> = BTreeMap::new();
    for u in &e.members {
        let p = to_infection_path(u, &e.minimal, &stacks).unwrap();
        by_path
            .entry(p.steps)
            .or_default()
            .push(u.values().to_vec());
    }
    for (path, members) in by_path.iter().take(12) {
        println!("path {path:?}");
        for m in members {
            println!("    {m:?}");
        }
    }
}
