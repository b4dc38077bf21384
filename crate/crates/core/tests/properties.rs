mod common;

use std::collections::BTreeSet;

use arw::experiments::{
    empirical_survival, fit_stretched_exponential, window_odometer_replica, TailEstimate,
};
use arw::extended::{Beam, Problem};
use arw::stabilize::{sleep_indicator, StabilizeOptions};
use arw::{
    enumerate_stable_extended, is_stable_on, legal_topple, mass_balance_residual, minimal_odometer,
    sample_bernoulli_config, stabilize, to_infection_path, Configuration, HashedStacks,
    Instruction, Interval, Odometer, Policy, Stacks,
};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const POLICIES: [Policy; 4] = [
    Policy::Sweep,
    Policy::RightmostFirst,
    Policy::RandomActive { seed: 99 },
    Policy::Queue,
];

fn lambda() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0)]
}

fn instance(seed: u64, lambda: f64, rho: f64, half: i64) -> (Configuration, HashedStacks) {
    let stacks = HashedStacks::new(seed, lambda);
    let config = sample_bernoulli_config(rho, Interval::new(-half, half), seed ^ 0xabc).unwrap();
    (config, stacks)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_policy_gives_the_same_stabilization(
        seed in any::<u64>(), lambda in lambda(), rho in 0.0..0.9f64, half in 1i64..20,
    ) {
        let (config, stacks) = instance(seed, lambda, rho, half);
        let set = Interval::centered(half);
        let base = stabilize(&config, set, &stacks, Policy::RightmostFirst, 1 << 30).unwrap();
        for p in POLICIES {
            let r = stabilize(&config, set, &stacks, p, 1 << 30).unwrap();
            prop_assert_eq!(&r.odometer, &base.odometer);
            prop_assert_eq!(&r.final_config, &base.final_config);
            prop_assert_eq!(r.topple_count, base.topple_count);
        }
        for v in set.sites() {
            prop_assert_eq!(mass_balance_residual(&base.odometer, &config, &stacks, v), 0);
        }
        // particles are conserved
        prop_assert_eq!(
            base.remaining() + base.exited_left + base.exited_right,
            config.total()
        );
    }

    #[test]
    fn replaying_legal_topples_reaches_the_same_state(
        seed in any::<u64>(), lambda in lambda(), half in 1i64..8,
    ) {
        let (config, stacks) = instance(seed, lambda, 0.5, half);
        let set = Interval::centered(half);
        let r = stabilize(&config, set, &stacks, Policy::Sweep, 1 << 30).unwrap();
        let mut c = config.clone();
        let mut o = Odometer::zero(config.window());
        // topple the leftmost active site of the set until none is left
        while let Some(v) = set.sites().find(|&v| c.is_active(v)) {
            legal_topple(&mut c, &mut o, &stacks, v).unwrap();
        }
        for v in set.sites() {
            prop_assert_eq!(o.get(v), r.odometer.get(v));
            prop_assert_eq!(c.count(v), r.final_config.count(v));
            prop_assert_eq!(c.is_asleep(v), r.final_config.is_asleep(v));
        }
    }

    #[test]
    fn odometer_grows_with_particles_and_with_the_set(
        seed in any::<u64>(), lambda in lambda(), half in 2i64..15, extra in -15i64..15,
    ) {
        let (config, stacks) = instance(seed, lambda, 0.4, half);
        let set = Interval::centered(half);
        let small = stabilize(&config, set, &stacks, Policy::default(), 1 << 30).unwrap();
        let mut more = config.clone();
        more.add_active(extra.clamp(-half, half));
        let big = stabilize(&more, set, &stacks, Policy::default(), 1 << 30).unwrap();
        let wide = stabilize(&config, Interval::centered(half + 1), &stacks, Policy::default(), 1 << 30).unwrap();
        for v in set.sites() {
            prop_assert!(small.odometer.get(v) <= big.odometer.get(v));
            prop_assert!(small.odometer.get(v) <= wide.odometer.get(v));
        }
    }

    #[test]
    fn window_odometer_is_monotone_in_n_and_rho(
        seed in any::<u64>(), replica in 0u64..1000, half in 1i64..30,
    ) {
        let opts = StabilizeOptions::default();
        let a = window_odometer_replica(1.0, 0.5, half, seed, replica, &opts).unwrap();
        let b = window_odometer_replica(1.0, 0.5, half + 1, seed, replica, &opts).unwrap();
        let c = window_odometer_replica(1.0, 0.7, half, seed, replica, &opts).unwrap();
        prop_assert!(a.m0 <= b.m0);
        prop_assert!(a.m0 <= c.m0);
    }

    #[test]
    fn stabilization_is_least_action(
        seed in any::<u64>(), lambda in lambda(), len in 1i64..=5,
    ) {
        let stacks = HashedStacks::new(seed, lambda);
        let set = Interval::new(0, len - 1);
        let config = sample_bernoulli_config(0.5, set, seed.rotate_left(7)).unwrap();
        let r = stabilize(&config, set, &stacks, Policy::default(), 1 << 20).unwrap();
        let cap = 10;
        let all = common::stable_odometers(&stacks, &config, set, cap);
        let found: Vec<i64> = set.sites().map(|v| r.odometer.get(v) as i64).collect();
        if found.iter().all(|&x| x <= cap) {
            prop_assert!(all.contains(&found));
        }
        for u in &all {
            prop_assert!(found.iter().zip(u).all(|(a, b)| a <= b), "{found:?} vs {u:?}");
        }
    }

    #[test]
    fn minimal_odometer_matches_brute_force(
        seed in any::<u64>(), lambda in lambda(), n in 1usize..=4,
        u0 in -3i64..6, f0 in -2i64..3, rho in prop_oneof![Just(0.0), Just(0.5)],
    ) {
        let stacks = HashedStacks::new(seed, lambda);
        let sigma = sample_bernoulli_config(rho, Interval::new(1, n as i64 - 1), seed ^ 1).unwrap();
        let m = minimal_odometer(&sigma, u0, f0, n, &stacks).unwrap();
        prop_assert_eq!(m.u0(), u0);
        prop_assert_eq!(m.flow(&stacks), f0);
        prop_assert!(is_stable_on(&m, &sigma, &stacks, Interval::new(1, n as i64 - 1)));
        let c = 4;
        let lo: Vec<i64> = m.values().iter().map(|&x| x - c).collect();
        let hi: Vec<i64> = m.values().iter().map(|&x| x + c).collect();
        let boxed = common::extended_in_box(&stacks, &sigma, u0, f0, &lo, &hi);
        prop_assert!(boxed.contains(&m.values().to_vec()));
        for u in &boxed {
            prop_assert!(m.values().iter().zip(u).all(|(a, b)| a <= b), "{:?} vs {u:?}", m.values());
        }
        // the enumeration is exactly the part of the box above the minimum
        let e = enumerate_stable_extended(&sigma, u0, f0, n, c as u64, &stacks).unwrap();
        let mine: BTreeSet<Vec<i64>> = e.members.iter().map(|u| u.values().to_vec()).collect();
        let theirs: BTreeSet<Vec<i64>> = boxed.into_iter().collect();
        prop_assert_eq!(mine, theirs);
    }

    #[test]
    fn equal_paths_differ_only_inside_sleep_runs(
        seed in any::<u64>(), lambda in lambda(), n in 2usize..=4, u0 in 0i64..6,
    ) {
        let stacks = HashedStacks::new(seed, lambda);
        let sigma = sample_bernoulli_config(0.5, Interval::new(1, n as i64 - 1), seed ^ 2).unwrap();
        let e = enumerate_stable_extended(&sigma, u0, 0, n, 5, &stacks).unwrap();
        let paths: Vec<_> = e
            .members
            .iter()
            .map(|u| to_infection_path(u, &e.minimal, &stacks).unwrap())
            .collect();
        for p in &paths {
            prop_assert_eq!(p.steps[0], (0, 0));
            for w in p.steps.windows(2) {
                prop_assert!(w[1].1 - w[0].1 <= 1);
                prop_assert!(w[1].0 >= 0);
            }
        }
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                if paths[i] != paths[j] {
                    continue;
                }
                let (a, b) = (&e.members[i], &e.members[j]);
                for k in 0..=n as i64 {
                    let (x, y) = (a.get(k), b.get(k));
                    if x != y {
                        prop_assert!(common::same_sleep_run(&stacks, k, x, y), "site {k}: {x} vs {y}");
                        let (lo, hi) = stacks.stack(k).sleep_run_bounds(x, 1 << 20).unwrap();
                        prop_assert!(lo <= y && y <= hi);
                    }
                }
            }
        }
    }

    #[test]
    fn best_sleeper_count_is_exact_on_small_instances(
        seed in any::<u64>(), lambda in lambda(), n in 1usize..=4, u0 in 0i64..8,
    ) {
        let stacks = HashedStacks::new(seed, lambda);
        let sigma = Configuration::empty(Interval::new(1, 0));
        let problem = Problem::new(&sigma, u0, 0, n, &stacks);
        let exact = Beam { depth: 1_000, width: usize::MAX };
        let (best, s) = problem.max_sleep(exact).unwrap();
        prop_assert!(is_stable_on(&best, &sigma, &stacks, Interval::new(1, n as i64 - 1)));
        prop_assert_eq!(best.flow(&stacks), 0);
        let counted: i64 = (1..=n as i64).map(|k| sleep_indicator(&stacks, k, best.get(k))).sum();
        prop_assert_eq!(counted, s as i64);
        let greedy = problem.greedy(64).unwrap();
        let g: i64 = (1..=n as i64).map(|k| sleep_indicator(&stacks, k, greedy.get(k))).sum();
        prop_assert!(g <= s as i64);
        let e = problem.enumerate(6).unwrap();
        for u in &e.members {
            let t: i64 = (1..=n as i64).map(|k| sleep_indicator(&stacks, k, u.get(k))).sum();
            prop_assert!(t <= s as i64);
        }
    }

    #[test]
    fn survival_is_nonincreasing(sample in proptest::collection::vec(0u64..50, 0..200)) {
        let grid: Vec<u64> = (0..60).collect();
        let s = empirical_survival(&sample, &grid);
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}

#[test]
fn instruction_frequencies_follow_the_law() {
    for lambda in [0.5, 1.0, 3.0] {
        let stacks = HashedStacks::new(2024, lambda);
        let mut seen = [0f64; 3];
        for site in -50..50 {
            for j in 1..2000 {
                seen[match stacks.instruction_at(site, j) {
                    Instruction::Sleep => 0,
                    Instruction::Left => 1,
                    Instruction::Right => 2,
                }] += 1.0;
            }
        }
        let total: f64 = seen.iter().sum();
        let p = [
            lambda / (1.0 + lambda),
            0.5 / (1.0 + lambda),
            0.5 / (1.0 + lambda),
        ];
        let chi2: f64 = seen
            .iter()
            .zip(p)
            .map(|(o, p)| (o - total * p).powi(2) / (total * p))
            .sum();
        let crit = ChiSquared::new(2.0).unwrap().inverse_cdf(0.999);
        assert!(chi2 < crit, "lambda {lambda}: chi2 {chi2} >= {crit}");
    }
}

#[test]
fn index_zero_is_a_fair_coin() {
    let stacks = HashedStacks::new(77, 1.0);
    let mut left = 0;
    for site in 0..20_000 {
        match stacks.instruction_at(site, 0) {
            Instruction::Left => left += 1,
            Instruction::Right => {}
            Instruction::Sleep => panic!("index 0 holds Sleep at site {site}"),
        }
    }
    let z = (left as f64 - 10_000.0) / (5_000f64).sqrt();
    assert!(z.abs() < 4.0, "z = {z}");
}

fn synthetic(f: impl Fn(f64) -> f64) -> TailEstimate {
    let n_grid: Vec<u64> = (1..=400).collect();
    TailEstimate {
        lambda: 1.0,
        rho: 0.0,
        half_window: 1,
        survival: n_grid.iter().map(|&n| f(n as f64)).collect(),
        n_grid,
        replicas: 0,
        overflowed: 0,
        seed: 0,
    }
}

#[test]
fn fit_recovers_synthetic_exponents() {
    let f = fit_stretched_exponential(&synthetic(|n| (-0.3 * n.sqrt()).exp()), None).unwrap();
    assert!((f.slope - 0.5).abs() < 0.01, "{f:?}");
    assert!((f.c_hat - 0.3).abs() < 0.01, "{f:?}");
    let f = fit_stretched_exponential(&synthetic(|n| (-0.01 * n).exp()), None).unwrap();
    assert!((f.slope - 1.0).abs() < 0.01, "{f:?}");
    assert!(fit_stretched_exponential(&synthetic(|_| 0.9), None).is_err());
}
