//! Closed-form back-action: conditional spin states for M0..M3 and the coherence sweep.
//!
//! `cargo run --example backaction_sweep`

use std::f64::consts::PI;

use spinphoton::backaction::{
    coherence_sweep, conditional_spin_state, conditional_stokes, detection_probability, ReflectionSet,
    SpinDynamicsParams,
};
use spinphoton::device::DeviceParams;

fn main() -> spinphoton::Result<()> {
    let r = ReflectionSet::from_reflectivities(0.69, 0.37, 0.06)?;
    let (p_up, p_down) = (0.51, 0.49);

    for (k, phi) in [0.0, PI / 6.0, PI / 3.0, PI / 2.0].into_iter().enumerate() {
        let s = conditional_spin_state(phi, p_up, p_down, &r)?;
        let st = conditional_stokes(&s, &r)?;
        println!(
            "M{k}: P_M = {:.4}  rho_uu = {:.3}  C_B = {:.3}  C_S = {:.3}",
            detection_probability(phi, p_up, p_down, &r)?,
            s.rho_uu(),
            s.bloch_coherence(),
            st.coherence()
        );
    }

    let dynamics = SpinDynamicsParams::from_device(&DeviceParams::default(), p_up)?;
    let phis: Vec<f64> = (0..=36).map(|k| (5.0 * k as f64).to_radians()).collect();
    let sweep = coherence_sweep(&phis, p_up, p_down, &r, 0.0, &dynamics)?;
    let best = sweep.iter().max_by(|a, b| a.c_s.total_cmp(&b.c_s)).unwrap();
    println!("\nC_S peaks at {:.0} deg with {:.3}", best.phi.to_degrees(), best.c_s);
    for p in sweep.iter().step_by(3) {
        println!("{:>5.0} deg  C_B = {:.3}  C_S = {:.3}", p.phi.to_degrees(), p.c_b, p.c_s);
    }
    Ok(())
}
