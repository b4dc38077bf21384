//! Two estimates of the critical density: driven-dissipative dynamics on an
//! interval, and the density at which fixed-energy windows stop fixating.
//!
//! Run with `cargo run --release --example critical_density`.

use arw::experiments::{
    density_grid, driven_dissipative_rho_c, fixation_phase_scan, DrivenParams, ScanParams,
};

fn main() {
    let lambda = 1.0;
    for n in [100, 200] {
        let e = driven_dissipative_rho_c(&DrivenParams::new(lambda, n, 20_000, 4_000, 1)).unwrap();
        println!(
            "driven-dissipative, n = {n}: {:.4} +/- {:.4}",
            e.estimate, e.uncertainty
        );
    }
    let scan = fixation_phase_scan(&ScanParams::new(
        lambda,
        density_grid(0.7, 1.0, 0.02),
        300,
        10,
        2,
    ))
    .unwrap();
    for p in &scan.points {
        println!("rho {:.2}: fixating {:.2}", p.rho, p.fixed_fraction);
    }
    println!(
        "phase-scan crossing {:.3} +/- {:.3}",
        scan.estimate.estimate, scan.estimate.uncertainty
    );
}
