//! Above the critical density the odometer at the origin of a block of `n`
//! sites grows like `n^2`.
//!
//! Run with `cargo run --release --example supercritical_growth`.

use arw::experiments::{supercritical_experiment, SupercriticalParams};
use arw::extended::{estimate_chat, ChatParams};

fn main() {
    let lambda = 1.0;
    let chat = estimate_chat(&ChatParams::new(lambda, 200, 20, 2))
        .unwrap()
        .mean;
    println!("growth rate estimate {chat:.4}, density {:.4}", chat + 0.1);
    let mut last = None;
    for n in [50, 100, 200, 400] {
        let s = supercritical_experiment(&SupercriticalParams {
            lambda,
            epsilon: 0.1,
            n,
            replicas: 100,
            seed: 3,
            chat,
            cap: 1 << 40,
        })
        .unwrap();
        let ratio = last.map(|m: f64| s.median_g0 / m);
        println!(
            "n {n:>4}: median g(0) {:>8.1}, ratio {}, above (1+lambda) eps n^2/32 = {:.1}: {:.2}",
            s.median_g0,
            ratio.map_or("-".to_string(), |r| format!("{r:.2}")),
            s.bound,
            s.fraction_above
        );
        last = Some(s.median_g0);
    }
}
