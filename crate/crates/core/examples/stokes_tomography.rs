//! Fit a noisy conditional Stokes trace for the Larmor period, T2* and T1.
//!
//! `cargo run --example stokes_tomography`

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spinphoton::backaction::{stokes_trace, ReflectionSet, SpinDynamicsParams};
use spinphoton::device::DeviceParams;
use spinphoton::tomography::{extract_all, measure_stokes_coherence, FitOptions};
use spinphoton::traces::{uniform_grid, StokesTrace};

fn main() -> spinphoton::Result<()> {
    let r = ReflectionSet::from_reflectivities(0.69, 0.37, 0.06)?;
    let dynamics = SpinDynamicsParams::from_device(&DeviceParams::default(), 0.51)?;
    let tau = uniform_grid(0.0, 20e-9, 0.05e-9)?;
    let clean = stokes_trace(PI / 6.0, &r, &dynamics, &tau)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut noisy = |v: &[f64]| v.iter().map(|x| x + noise.sample(&mut rng)).collect::<Vec<_>>();
    let measured = StokesTrace::new(tau.clone(), noisy(&clean.s_hv), noisy(&clean.s_da), noisy(&clean.s_rl))?;

    let fit = extract_all(&measured, &FitOptions::default())?;
    println!("true: T_L = {:.1} ps, T2* = {:.3} ns, T1 = {:.3} ns", dynamics.larmor_period() * 1e12, dynamics.t2_star * 1e9, dynamics.t1 * 1e9);
    if let Some(osc) = &fit.oscillation {
        println!(
            "fit:  T_L = {:.1} ps, T2* = {:.3} +/- {:.3} ns",
            2.0 * PI / osc.omega * 1e12,
            osc.t2 * 1e9,
            osc.t2_err * 1e9
        );
    }
    println!("      T1 = {:.3} +/- {:.3} ns", fit.t1 * 1e9, fit.relaxation.t1_err * 1e9);
    println!("C_S at 0+: {:.3}", measure_stokes_coherence(&fit, 0.0));
    Ok(())
}
