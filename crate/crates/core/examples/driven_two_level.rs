//! Resonantly driven two-level emitter: steady state, transient, and photon antibunching.
//!
//! `cargo run --example driven_two_level`

use spinphoton::qcore::ops::{dagger, ket_bra};
use spinphoton::qcore::{build_lindblad, propagate, two_time_correlation, CMat, DensityOperator, JumpOperator, Subsystem, C64};

fn main() -> spinphoton::Result<()> {
    let gamma = 1e9;
    let rabi = 2e9;
    let sigma = ket_bra(2, 0, 1);
    let h = CMat::from_fn(2, 2, |i, j| (sigma[(i, j)] + dagger(&sigma)[(i, j)]) * (rabi / 2.0));
    let l = build_lindblad(&h, &[JumpOperator::new(sigma.clone(), gamma)])?;

    let rho_ss = l.steady_state()?;
    let excited = ket_bra(2, 1, 1);
    println!("steady excited population: {:.4}", rho_ss.expectation(&excited).re);

    let ground = DensityOperator::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], vec![Subsystem::new("tls", 2)])?;
    for t in [0.5e-9, 1e-9, 2e-9, 5e-9] {
        let rho = propagate(&l, &ground, t)?;
        println!("t = {:>4.1} ns  P_e = {:.4}", t * 1e9, rho.expectation(&excited).re);
    }

    let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5e-9).collect();
    let n_ss = rho_ss.expectation(&excited).re;
    let g = two_time_correlation(&l, &rho_ss, &sigma, &excited, &grid)?;
    for (t, v) in g.tau.iter().zip(&g.values) {
        println!("g2({:>3.1} ns) = {:.4}", t * 1e9, v / (n_ss * n_ss));
    }
    Ok(())
}
