//! Level structure and the bare and coupled cavity reflection around the first transition.
//!
//! `cargo run --example cavity_response`

use spinphoton::device::{coupled_reflection_estimate, empty_cavity_reflection, ghz, level_structure, to_ghz, DeviceParams, Pol};

fn main() {
    let p = DeviceParams::default();
    let ls = level_structure(&p);
    println!("Larmor period: {:.1} ps", ls.larmor_period() * 1e12);
    for (k, w) in ls.omega.iter().enumerate() {
        println!("transition {}: {:+.3} GHz from the cavity centre ({:?})", k + 1, to_ghz(*w), ls.polarization_of(k));
    }

    println!("\n detuning_GHz  |r_cav|^2  |r_coupled|^2");
    let w1 = ls.omega[0];
    for k in -8..=8 {
        let w = w1 + ghz(0.25 * k as f64);
        println!(
            "{:>12.2}  {:>9.4}  {:>13.4}",
            0.25 * k as f64,
            empty_cavity_reflection(&p, Pol::V, w).norm_sqr(),
            coupled_reflection_estimate(&p, w).norm_sqr()
        );
    }
}
