//! Master-equation steady state: populations, inferred reflection amplitudes, and the spin
//! state after one detected photon.
//!
//! `cargo run --release --example master_equation`

use std::f64::consts::PI;

use spinphoton::lindblad::{click_condition, operating_point, reflection_set_from, SimulationConfig};

fn main() -> spinphoton::Result<()> {
    let cfg = SimulationConfig::default();
    let op = operating_point(&cfg)?;
    let (up, down) = op.spin_populations();
    println!("P_up = {up:.4}, P_down = {down:.4}, trion = {:.2e}, cutoff = {:.1e}", op.trion_population(), op.max_cutoff_population);

    let r = reflection_set_from(&cfg, &op)?;
    let (uu, dd, du) = r.magnitudes_squared();
    println!("|r_uu|^2 = {uu:.4}, |r_dd|^2 = {dd:.4}, |r_du|^2 = {du:.4}");

    for deg in [0.0, 30.0, 60.0, 90.0] {
        let c = click_condition(&cfg, deg * PI / 180.0)?;
        println!(
            "phi = {deg:>4.0} deg: rho_uu = {:.3}, C_B = {:.3}, click probability = {:.3e}",
            c.reduced_spin.rho_uu(),
            c.reduced_spin.bloch_coherence(),
            c.click_probability
        );
    }
    Ok(())
}
