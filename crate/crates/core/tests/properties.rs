//! Randomized invariants over generators, spin states and fits.

use proptest::prelude::*;
use spinphoton::backaction::{
    conditional_spin_state, conditional_stokes, evolve_spin, Envelope, ReflectionSet, SpinDynamicsParams,
};
use spinphoton::qcore::ops::{dagger, max_abs_diff, trace, unvec, vec_of};
use spinphoton::qcore::{build_lindblad, propagate, CMat, DensityOperator, JumpOperator, Subsystem, C64};
use spinphoton::tomography::{fit_damped_oscillation, fit_relaxation, InitialGuess, RelaxationModel};
use spinphoton::traces::uniform_grid;

const N: usize = 3;

fn complex_matrix(n: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| CMat::from_fn(n, n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1)))
}

fn hermitian(n: usize) -> impl Strategy<Value = CMat> {
    complex_matrix(n).prop_map(|m| {
        let d = dagger(&m);
        CMat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + d[(i, j)]) * 0.5)
    })
}

fn density(n: usize) -> impl Strategy<Value = DensityOperator> {
    complex_matrix(n).prop_map(move |a| {
        let m = &a * dagger(&a);
        let t = trace(&m);
        DensityOperator::new(CMat::from_fn(n, n, |i, j| m[(i, j)] / t), vec![Subsystem::new("s", n)]).unwrap()
    })
}

fn lindbladian() -> impl Strategy<Value = spinphoton::qcore::Liouvillian> {
    (hermitian(N), prop::collection::vec((complex_matrix(N), 0.1f64..2.0), 1..3)).prop_map(|(h, js)| {
        let jumps: Vec<JumpOperator> = js.into_iter().map(|(op, rate)| JumpOperator::new(op, rate)).collect();
        build_lindblad(&h, &jumps).unwrap()
    })
}

fn reflection_set() -> impl Strategy<Value = ReflectionSet> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, -3.2f64..3.2, -3.2f64..3.2, -3.2f64..3.2).prop_map(
        |(uu, a, frac, p1, p2, p3)| {
            let (dd, du) = (a * frac, a * (1.0 - frac));
            ReflectionSet::new(
                C64::from_polar(uu.sqrt(), p1),
                C64::from_polar(dd.sqrt(), p2),
                C64::from_polar(du.sqrt(), p3),
            )
            .unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn steady_state_is_a_valid_fixed_point(l in lindbladian()) {
        let rho = l.steady_state().unwrap();
        rho.validate().unwrap();
        prop_assert!(l.stationarity_residual(rho.matrix()) < 1e-9);
    }

    #[test]
    fn evolution_preserves_trace_and_composes(l in lindbladian(), rho in density(N), t1 in 0.0f64..2.0, t2 in 0.0f64..2.0) {
        let direct = propagate(&l, &rho, t1 + t2).unwrap();
        let stepped = propagate(&l, &propagate(&l, &rho, t1).unwrap(), t2).unwrap();
        direct.validate().unwrap();
        prop_assert!((trace(direct.matrix()).re - 1.0).abs() < 1e-10);
        prop_assert!(max_abs_diff(direct.matrix(), stepped.matrix()) < 1e-8);
    }

    #[test]
    fn vectorization_round_trips(m in complex_matrix(4)) {
        prop_assert_eq!(unvec(&vec_of(&m), 4), m);
    }

    #[test]
    fn conditioned_spin_is_physical(
        phi in -3.2f64..3.2,
        p_up in 0.0f64..1.0,
        r in reflection_set(),
        tau in 0.0f64..2e-8,
    ) {
        let Ok(s) = conditional_spin_state(phi, p_up, 1.0 - p_up, &r) else {
            // zero detection probability is the only admissible failure
            let p = spinphoton::backaction::detection_probability(phi, p_up, 1.0 - p_up, &r).unwrap();
            prop_assert!(p < 1e-9);
            return Ok(());
        };
        s.density().validate().unwrap();
        let dynamics = SpinDynamicsParams::new(8.4e9, 4.1e-9, 1.9e-9, 0.51, Envelope::Gaussian).unwrap();
        let evolved = evolve_spin(&s, tau, &dynamics).unwrap();
        evolved.density().validate().unwrap();
        let b = evolved.bloch();
        prop_assert!((b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt() <= 1.0 + 1e-9);
        if let Ok(st) = conditional_stokes(&evolved, &r) {
            for v in [st.s_hv, st.s_da, st.s_rl] {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
            }
            let (_, _, p_refl) = spinphoton::backaction::conditional_probabilities(&evolved, &r);
            let expected = 2.0 * (evolved.rho_du() * r.r_uu.conj() * r.r_du).norm() / p_refl;
            prop_assert!((st.coherence() - expected).abs() < 1e-10 * expected.max(1.0));
        }
    }

    #[test]
    fn oscillation_fit_round_trips(
        period_ps in 400.0f64..1200.0,
        t2_ns in 1.0f64..4.0,
        amp in 0.1f64..0.8,
        theta in -3.0f64..3.0,
        exponential in any::<bool>(),
    ) {
        let env = if exponential { Envelope::Exponential } else { Envelope::Gaussian };
        let (omega, t2) = (2.0 * std::f64::consts::PI / (period_ps * 1e-12), t2_ns * 1e-9);
        let tau = uniform_grid(0.0, 12e-9, 0.05e-9).unwrap();
        let y: Vec<f64> = tau.iter().map(|&t| amp * env.eval(t, t2) * (omega * t + theta).cos()).collect();
        let f = fit_damped_oscillation(&tau, &y, env, InitialGuess::default()).unwrap();
        prop_assert!((f.omega / omega - 1.0).abs() < 1e-6);
        prop_assert!((f.t2 / t2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn relaxation_fit_round_trips(t1_ns in 1.0f64..8.0, c in -0.95f64..-0.2, b in 0.05f64..0.5) {
        let tau = uniform_grid(0.0, 20e-9, 0.05e-9).unwrap();
        let y: Vec<f64> = tau.iter().map(|&t| c + b * (-t / (t1_ns * 1e-9)).exp()).collect();
        let f = fit_relaxation(&tau, &y, 1e-9, RelaxationModel::Exponential).unwrap();
        prop_assert!((f.t1 / (t1_ns * 1e-9) - 1.0).abs() < 1e-6);
    }
}
