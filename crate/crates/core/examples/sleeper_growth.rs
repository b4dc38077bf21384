//! Growth rate of the number of sleepers a stable extended odometer can
//! leave on `[1, n]`, comparing the one-step greedy rule with the level-set
//! search.
//!
//! Run with `cargo run --release --example sleeper_growth -- [n] [replicas]`.

use arw::extended::{estimate_chat, Beam, ChatMethod, ChatParams};

fn main() {
    let mut args = std::env::args()
        .skip(1)
        .map(|s| s.parse::<usize>().unwrap());
    let n = args.next().unwrap_or(200);
    let replicas = args.next().unwrap_or(20);
    for lambda in [0.5, 1.0, 2.0] {
        let mut p = ChatParams::new(lambda, n, replicas, 1);
        p.method = ChatMethod::Greedy { lookahead: 64 };
        let greedy = estimate_chat(&p).unwrap();
        p.method = ChatMethod::Beam(Beam::default());
        let beam = estimate_chat(&p).unwrap();
        println!(
            "lambda {lambda:<4} greedy {:.4} +/- {:.4}   level-set {:.4} +/- {:.4}",
            greedy.mean, greedy.std_err, beam.mean, beam.std_err
        );
    }
}
