//! Master-equation model: limiting cases, steady-state regime, correlations and traces.

use std::f64::consts::PI;

use spinphoton::device::{dressed_omega_1, empty_cavity_reflection, level_structure, Pol, Polarization};
use spinphoton::error::Error;
use spinphoton::lindblad::{
    build_model, click_condition, extract_reflection_set, operating_point, overhauser_average, radiative_lifetime,
    unconditional_reflectivities, BasisTraces, G2Normalization, SimulationConfig, BASES,
};
use spinphoton::lindblad::basis_polarization;
use spinphoton::qcore::C64;

fn single_node() -> SimulationConfig {
    SimulationConfig { overhauser_nodes: 1, ..SimulationConfig::default() }
}

fn uncoupled(drive: f64) -> SimulationConfig {
    let mut c = single_node();
    c.params.g = 0.0;
    c.params.drive_photon_rate = drive;
    c
}

fn grid(max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| max * k as f64 / n as f64).collect()
}

#[test]
fn undriven_uncoupled_steady_state_is_vacuum_and_unpolarized() {
    let model = build_model(&uncoupled(0.0), 0.0).unwrap();
    let rho = model.steady_state().unwrap();
    let m = rho.matrix();
    // |q, 0, 0⟩ sits at index q·9
    assert!((m[(0, 0)].re - 0.5).abs() < 1e-10);
    assert!((m[(9, 9)].re - 0.5).abs() < 1e-10);
    assert!(m[(0, 9)].norm() < 1e-10);
    assert!(model.cutoff_population(&rho) < 1e-14);
}

#[test]
fn uncoupled_cavity_holds_classical_amplitude() {
    let cfg = uncoupled(1.6e7);
    let model = build_model(&cfg, 0.0).unwrap();
    let rho = model.steady_state().unwrap();
    let p = &cfg.params;
    let delta = p.omega_v() - cfg.omega_laser();
    let expected = (p.eta_top_v * p.kappa_v).sqrt() * p.input_amplitude() / C64::new(p.kappa_v / 2.0, delta);
    let got = rho.expectation(&model.a_v);
    assert!((got - expected).norm() < 1e-8 * expected.norm(), "{got} vs {expected}");
    assert!(rho.expectation(&model.a_h).norm() < 1e-12);
}

#[test]
fn default_drive_is_weak() {
    let op = operating_point(&SimulationConfig::default()).unwrap();
    assert!(op.trion_population() < 0.05, "trion population {}", op.trion_population());
    assert!(op.max_cutoff_population < 1e-4);
}

#[test]
fn empty_dot_reproduces_empty_cavity_curve() {
    let mut cfg = single_node();
    cfg.params.p_charge = 0.0;
    let det: Vec<f64> = (-4..=4).map(|k| 2.0 * PI * 2.5e9 * k as f64).collect();
    for pt in unconditional_reflectivities(&cfg, &det).unwrap() {
        assert!((pt.p_vv - pt.p_cav).abs() < 1e-6);
        assert!(pt.p_vh.abs() < 1e-6);
    }
}

#[test]
fn raman_channel_vanishes_far_from_resonance() {
    let cfg = single_node();
    let far = 2.0 * PI * 400e9;
    let pts = unconditional_reflectivities(&cfg, &[-far, far]).unwrap();
    for pt in pts {
        assert!(pt.p_vh < 1e-3);
        let uncharged = cfg.params.p_charge * empty_cavity_reflection(&cfg.params, Pol::V, cfg.params.delta_qd + pt.detuning).norm_sqr()
            + (1.0 - cfg.params.p_charge) * pt.p_cav;
        assert!((pt.p_vv - uncharged).abs() < 0.02, "{} vs {}", pt.p_vv, uncharged);
    }
}

#[test]
fn raman_reflectivity_at_first_transition() {
    let cfg = SimulationConfig::default();
    let d = level_structure(&cfg.params).omega[0] - cfg.params.delta_qd;
    let pt = unconditional_reflectivities(&cfg, &[d]).unwrap()[0];
    assert!((pt.p_vh - 0.03).abs() < 0.015, "P_VH = {}", pt.p_vh);
}

#[test]
fn extracted_reflectivities_in_range() {
    let cfg = SimulationConfig::default();
    let (uu, dd, du) = extract_reflection_set(&cfg).unwrap().magnitudes_squared();
    let r_cav = empty_cavity_reflection(&cfg.params, Pol::V, level_structure(&cfg.params).omega[0]).norm_sqr();
    assert!((r_cav - 0.69).abs() < 0.02, "|r_cav|^2 = {r_cav}");
    assert!((uu - 0.69).abs() < 0.02, "|r_uu|^2 = {uu}");
    assert!((0.30..=0.44).contains(&dd), "|r_dd|^2 = {dd}");
    assert!((0.04..=0.08).contains(&du), "|r_du|^2 = {du}");
}

#[test]
fn uncoupled_dot_reflects_like_the_cavity() {
    let r = extract_reflection_set(&uncoupled(1.6e7)).unwrap();
    assert!((r.r_dd - r.r_uu).norm() < 1e-8);
    assert!(r.r_du.norm() < 1e-8);
}

#[test]
fn uncoupled_dot_gives_coherent_light() {
    // truncation at two photons bends g2 by O(<n>); a weaker drive makes that negligible
    let cfg = uncoupled(1.6e4);
    let bt = BasisTraces::compute(&cfg, &grid(5e-9, 10)).unwrap();
    for first in [Polarization::linear(PI / 6.0), Polarization::v(), Polarization::diagonal()] {
        for name in BASES {
            let second = basis_polarization(name).unwrap();
            if (second.v.conj() * first.v).norm() < 1e-12 {
                continue;
            }
            for v in bt.g2(first, second).unwrap() {
                assert!((v - 1.0).abs() < 1e-6, "{name}: {v}");
            }
        }
    }
}

#[test]
fn uncoupled_click_leaves_spin_alone() {
    let mut cfg = uncoupled(1e4);
    cfg.params.p_charge = 1.0;
    let s = click_condition(&cfg, PI / 6.0).unwrap().reduced_spin;
    assert!((s.rho_uu() - 0.5).abs() < 1e-8);
    assert!(s.rho_du().norm() < 1e-8);
}

#[test]
fn conditioning_at_thirty_degrees() {
    let cfg = SimulationConfig::default();
    let s = click_condition(&cfg, 0.0).unwrap();
    assert!(s.reduced_spin.rho_uu() > 0.9);
    assert!(s.click_probability > 0.0 && s.click_probability <= 1.0);
    let cb = click_condition(&cfg, PI / 6.0).unwrap().reduced_spin.bloch_coherence();
    assert!((0.3..=0.5).contains(&cb), "C_B = {cb}");
}

#[test]
fn correlations_and_traces() {
    let cfg = single_node();
    let tau = grid(8e-9, 32);
    let bt = BasisTraces::compute(&cfg, &tau).unwrap();
    let m = Polarization::linear(PI / 6.0);

    for name in BASES {
        let t = basis_polarization(name).unwrap();
        let sym = bt.g2_symmetric(m, t).unwrap();
        let reverse = bt.g2(t, m).unwrap();
        let n = tau.len();
        for k in 1..n {
            assert!((sym.values[n - 1 - k] - reverse[k]).abs() < 1e-8);
            assert_eq!(sym.tau[n - 1 - k], -tau[k]);
        }
    }
    assert!(bt.g2(m, Polarization::h()).unwrap()[1] < 1.0);
    assert!(bt.g2(m, Polarization::v()).unwrap()[1] > 1.0);

    let st = bt.stokes(m).unwrap();
    for c in [&st.s_hv, &st.s_da, &st.s_rl] {
        assert!(c.iter().all(|v| (-1.0..=1.0).contains(v)));
    }
    for k in 0..tau.len() {
        let s = bt.spin_state(k, m).unwrap();
        s.density().validate().unwrap();
    }

    let b0 = bt.bloch(Polarization::h()).unwrap();
    assert!(b0.y.iter().chain(&b0.z).all(|v| v.abs() < 1e-10));
}

#[test]
fn long_delay_limits() {
    let mut cfg = SimulationConfig { g2_normalization: G2Normalization::ChargedOnly, ..single_node() };
    cfg.tau_grid.max = 200e-9;
    let bt = BasisTraces::compute(&cfg, &[0.0, 100e-9, 200e-9]).unwrap();
    let m = Polarization::linear(PI / 6.0);
    let st = bt.stokes(m).unwrap();
    let op = &bt.steady;
    let stokes = |t: Polarization, tb: Polarization| {
        let (a, b) = (op.intensity(t), op.intensity(tb));
        (a - b) / (a + b)
    };
    let last = st.len() - 1;
    assert!((st.s_hv[last] - stokes(Polarization::h(), Polarization::v())).abs() < 1e-6);
    assert!((st.s_da[last] - stokes(Polarization::diagonal(), Polarization::antidiagonal())).abs() < 1e-6);
    assert!((st.s_rl[last] - stokes(Polarization::right(), Polarization::left())).abs() < 1e-6);

    let b = bt.bloch(m).unwrap();
    assert!((b.x[last] - 0.02).abs() < 0.01, "sigma_x = {}", b.x[last]);
    assert!(b.y[last].abs() < 1e-6 && b.z[last].abs() < 1e-6);

    let blended = BasisTraces::compute(&SimulationConfig { tau_grid: cfg.tau_grid, ..single_node() }, &[0.0, 200e-9]).unwrap();
    for name in BASES {
        let v = blended.g2(m, basis_polarization(name).unwrap()).unwrap()[1];
        assert!((v - 1.0).abs() < 0.02, "{name}: {v}");
    }
}

#[test]
fn single_node_is_unaveraged() {
    let v: f64 = overhauser_average(1e9, 1, |d| Ok(d + 3.0)).unwrap();
    assert_eq!(v, 3.0);
}

#[test]
fn quadrature_converges_between_nine_and_fifteen_nodes() {
    let tau = grid(4e-9, 16);
    let run = |nodes| {
        let cfg = SimulationConfig { overhauser_nodes: nodes, fock_cutoff: 1, ..SimulationConfig::default() };
        BasisTraces::compute(&cfg, &tau).unwrap().stokes(Polarization::linear(PI / 6.0)).unwrap()
    };
    let (a, b) = (run(9), run(15));
    let worst = [(&a.s_hv, &b.s_hv), (&a.s_da, &b.s_da), (&a.s_rl, &b.s_rl)]
        .iter()
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "9 vs 15 nodes differ by {worst}");
}

#[test]
fn radiative_lifetime_in_window() {
    let t = radiative_lifetime(&SimulationConfig::default()).unwrap();
    assert!((330e-12..=610e-12).contains(&t), "T_rad = {t}");
}

#[test]
fn strong_drive_violates_cutoff() {
    let mut cfg = single_node();
    cfg.params.drive_photon_rate = 1e12;
    match operating_point(&cfg) {
        Err(Error::CutoffViolation(p)) => assert!(p > 1e-4),
        other => panic!("expected cutoff violation, got {other:?}"),
    }
}

#[test]
fn laser_defaults_to_dressed_transition() {
    let cfg = SimulationConfig::default();
    assert_eq!(cfg.omega_laser(), dressed_omega_1(&cfg.params));
}
