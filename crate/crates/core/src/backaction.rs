//! Closed-form back-action model: a reflected photon detected in a chosen polarization
//! conditions the electron spin, which then precesses, dephases and relaxes. The second
//! photon's polarization maps the spin populations and coherence.
//!
//! Spin basis index 0 is |↑⟩, index 1 is |↓⟩ (x-quantized energy eigenstates).

use std::f64::consts::PI;

use crate::device::{half_angle, Polarization};
use crate::error::{Error, Result};
use crate::qcore::ops::{CMat, C64};
use crate::qcore::DensityOperator;
use crate::traces::{BlochTrace, StokesTrace};

const PROB_TOL: f64 = 1e-9;

/// Reflection amplitudes r↑↑, r↓↓ and the Raman amplitude r↓↑.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionSet {
    pub r_uu: C64,
    pub r_dd: C64,
    pub r_du: C64,
}

impl ReflectionSet {
    pub fn new(r_uu: C64, r_dd: C64, r_du: C64) -> Result<Self> {
        let set = Self { r_uu, r_dd, r_du };
        for (name, r) in [("r_uu", r_uu), ("r_dd", r_dd), ("r_du", r_du)] {
            if !r.re.is_finite() || !r.im.is_finite() || r.norm() > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!("|{name}| = {} exceeds 1", r.norm())));
            }
        }
        if r_dd.norm_sqr() + r_du.norm_sqr() > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter("|r_dd|^2 + |r_du|^2 exceeds 1".into()));
        }
        Ok(set)
    }

    /// Real, positive amplitudes from reflectivities.
    pub fn from_reflectivities(r_uu2: f64, r_dd2: f64, r_du2: f64) -> Result<Self> {
        for v in [r_uu2, r_dd2, r_du2] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("reflectivity {v} outside [0, 1]")));
            }
        }
        Self::new(C64::new(r_uu2.sqrt(), 0.0), C64::new(r_dd2.sqrt(), 0.0), C64::new(r_du2.sqrt(), 0.0))
    }

    pub fn magnitudes_squared(&self) -> (f64, f64, f64) {
        (self.r_uu.norm_sqr(), self.r_dd.norm_sqr(), self.r_du.norm_sqr())
    }

    /// The same magnitudes with all phases dropped.
    pub fn real_positive(&self) -> Self {
        Self {
            r_uu: C64::new(self.r_uu.norm(), 0.0),
            r_dd: C64::new(self.r_dd.norm(), 0.0),
            r_du: C64::new(self.r_du.norm(), 0.0),
        }
    }
}

/// Two-level spin density matrix.
#[derive(Debug, Clone)]
pub struct SpinState {
    rho: DensityOperator,
}

impl SpinState {
    pub fn from_matrix(m: CMat) -> Result<Self> {
        if m.nrows() != 2 || m.ncols() != 2 {
            return Err(Error::Dimension("spin state must be 2x2".into()));
        }
        let rho = DensityOperator::new(m, vec![crate::qcore::Subsystem::new("spin", 2)])?;
        Ok(Self { rho })
    }

    /// From ρ↑↑ and ρ↓↑; ρ↓↓ = 1 − ρ↑↑ and ρ↑↓ = conj(ρ↓↑).
    pub fn from_elements(rho_uu: f64, rho_du: C64) -> Result<Self> {
        let m = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(rho_uu, 0.0),
            (1, 1) => C64::new(1.0 - rho_uu, 0.0),
            (1, 0) => rho_du,
            _ => rho_du.conj(),
        });
        Self::from_matrix(m)
    }

    pub fn thermal(p_up: f64) -> Result<Self> {
        Self::from_elements(p_up, C64::new(0.0, 0.0))
    }

    pub fn rho_uu(&self) -> f64 {
        self.rho.matrix()[(0, 0)].re
    }

    pub fn rho_dd(&self) -> f64 {
        self.rho.matrix()[(1, 1)].re
    }

    /// ρ↓↑ = ⟨↓|ρ|↑⟩.
    pub fn rho_du(&self) -> C64 {
        self.rho.matrix()[(1, 0)]
    }

    /// ρ↑↓ = ⟨↑|ρ|↓⟩.
    pub fn rho_ud(&self) -> C64 {
        self.rho.matrix()[(0, 1)]
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    /// (⟨σx⟩, ⟨σy⟩, ⟨σz⟩) with the quantization axis along x.
    pub fn bloch(&self) -> [f64; 3] {
        let c = self.rho_ud();
        [self.rho_uu() - self.rho_dd(), 2.0 * c.re, -2.0 * c.im]
    }

    /// Bloch coherence 2|ρ↓↑|.
    pub fn bloch_coherence(&self) -> f64 {
        2.0 * self.rho_du().norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Envelope {
    #[default]
    Gaussian,
    Exponential,
}

impl Envelope {
    pub fn eval(self, tau: f64, t2: f64) -> f64 {
        match self {
            Envelope::Gaussian => (-(tau / t2).powi(2)).exp(),
            Envelope::Exponential => (-tau / t2).exp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpinDynamicsParams {
    pub omega_l: f64,
    pub t1: f64,
    pub t2_star: f64,
    pub rho_stationary: SpinState,
    pub envelope: Envelope,
}

impl SpinDynamicsParams {
    pub fn new(omega_l: f64, t1: f64, t2_star: f64, p_up: f64, envelope: Envelope) -> Result<Self> {
        if !(t1 > 0.0) || !(t2_star > 0.0) || !omega_l.is_finite() {
            return Err(Error::InvalidParameter("spin times must be positive".into()));
        }
        Ok(Self { omega_l, t1, t2_star, rho_stationary: SpinState::thermal(p_up)?, envelope })
    }

    /// ω_L from the electron Zeeman term, T1 = τ_esc, T2* = √2/γ_e.
    pub fn from_device(params: &crate::device::DeviceParams, p_up: f64) -> Result<Self> {
        let ls = crate::device::level_structure(params);
        Self::new(ls.electron_zeeman, params.tau_esc, params.t2_star(), p_up, Envelope::Gaussian)
    }

    pub fn larmor_period(&self) -> f64 {
        2.0 * PI / self.omega_l
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub s_hv: f64,
    pub s_da: f64,
    pub s_rl: f64,
}

impl StokesVector {
    pub fn degree(&self) -> f64 {
        (self.s_hv.powi(2) + self.s_da.powi(2) + self.s_rl.powi(2)).sqrt()
    }

    pub fn coherence(&self) -> f64 {
        self.s_da.hypot(self.s_rl)
    }
}

/// Measurement polarization cos(φ/2)|H⟩ + sin(φ/2)|V⟩.
pub fn measurement_state(phi: f64) -> Polarization {
    Polarization::linear(phi)
}

fn check_populations(p_up: f64, p_down: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_up) || !(0.0..=1.0).contains(&p_down) {
        return Err(Error::InvalidParameter(format!("populations ({p_up}, {p_down}) outside [0, 1]")));
    }
    if (p_up + p_down - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidParameter(format!("P_up + P_down = {} != 1", p_up + p_down)));
    }
    Ok(())
}

/// Probability of detecting an M-polarized reflected photon.
pub fn detection_probability(phi: f64, p_up: f64, p_down: f64, r: &ReflectionSet) -> Result<f64> {
    check_populations(p_up, p_down)?;
    let (c, s) = half_angle(phi);
    let (uu, dd, du) = r.magnitudes_squared();
    Ok(p_up * uu * s * s + p_down * (du * c * c + dd * s * s))
}

/// Spin state after detecting one M-polarized photon.
pub fn conditional_spin_state(phi: f64, p_up: f64, p_down: f64, r: &ReflectionSet) -> Result<SpinState> {
    let pm = detection_probability(phi, p_up, p_down, r)?;
    if !(pm > 0.0) {
        return Err(Error::InvalidParameter(format!("detection probability {pm} leaves conditioning undefined")));
    }
    let (c, s) = half_angle(phi);
    let sin_phi = 2.0 * s * c;
    let rho_dd = p_down * r.r_dd.norm_sqr() * s * s / pm;
    let rho_du = r.r_dd * r.r_du.conj() * (p_down * sin_phi / (2.0 * pm));
    SpinState::from_elements(1.0 - rho_dd, rho_du)
}

/// Spin state after detecting a photon in an arbitrary polarization `m`. Reduces to
/// [`conditional_spin_state`] for linear polarizations.
pub fn conditional_spin_state_pol(m: Polarization, p_up: f64, p_down: f64, r: &ReflectionSet) -> Result<SpinState> {
    check_populations(p_up, p_down)?;
    let (mh, mv) = (m.h.conj(), m.v.conj());
    let up = p_up * (r.r_uu * mv).norm_sqr() + p_down * (r.r_du * mh).norm_sqr();
    let down = p_down * (r.r_dd * mv).norm_sqr();
    let pm = up + down;
    if !(pm > 0.0) {
        return Err(Error::InvalidParameter(format!("detection probability {pm} leaves conditioning undefined")));
    }
    let rho_du = r.r_dd * mv * (r.r_du * mh).conj() * (p_down / pm);
    SpinState::from_elements(up / pm, rho_du)
}

pub fn evolve_spin(state: &SpinState, tau: f64, dynamics: &SpinDynamicsParams) -> Result<SpinState> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("delay {tau} must be >= 0")));
    }
    if tau == 0.0 {
        return Ok(state.clone());
    }
    let relax = (-tau / dynamics.t1).exp();
    let target = dynamics.rho_stationary.rho_uu();
    let rho_uu = target + (state.rho_uu() - target) * relax;
    let env = dynamics.envelope.eval(tau, dynamics.t2_star);
    // ρ↑↓ ∝ e^{-iω_L τ}, so ρ↓↑ ∝ e^{+iω_L τ}
    let rho_du = state.rho_du() * C64::from_polar(env, dynamics.omega_l * tau);
    SpinState::from_elements(rho_uu, rho_du)
}

/// (P_H|M, P_V|M, P_refl|M); the last is the exact sum of the first two.
pub fn conditional_probabilities(state: &SpinState, r: &ReflectionSet) -> (f64, f64, f64) {
    let (uu, dd, du) = r.magnitudes_squared();
    let p_h = du * state.rho_dd();
    let p_v = dd * state.rho_dd() + uu * state.rho_uu();
    (p_h, p_v, p_h + p_v)
}

/// Probability that the next reflected photon is found in polarization `t`.
pub fn photon_probability(state: &SpinState, r: &ReflectionSet, t: Polarization) -> f64 {
    let (uu, dd, du) = r.magnitudes_squared();
    let (th, tv) = (t.h.norm_sqr(), t.v.norm_sqr());
    let cross = state.rho_du() * r.r_uu.conj() * r.r_du * t.v * t.h.conj();
    state.rho_uu() * uu * tv + state.rho_dd() * (dd * tv + du * th) + 2.0 * cross.re
}

pub fn conditional_stokes(state: &SpinState, r: &ReflectionSet) -> Result<StokesVector> {
    let (uu, dd, du) = r.magnitudes_squared();
    let (_, _, p_refl) = conditional_probabilities(state, r);
    if !(p_refl > 0.0) {
        return Err(Error::InvalidParameter("zero conditional reflectivity".into()));
    }
    let k = r.r_uu * r.r_du.conj() * state.rho_ud();
    Ok(StokesVector {
        s_hv: ((du - dd) * state.rho_dd() - uu * state.rho_uu()) / p_refl,
        s_da: 2.0 * k.re / p_refl,
        s_rl: 2.0 * k.im / p_refl,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherencePoint {
    pub phi: f64,
    pub c_b: f64,
    pub c_s: f64,
}

pub fn coherence_sweep(
    phi_grid: &[f64],
    p_up: f64,
    p_down: f64,
    r: &ReflectionSet,
    at_tau: f64,
    dynamics: &SpinDynamicsParams,
) -> Result<Vec<CoherencePoint>> {
    phi_grid
        .iter()
        .map(|&phi| {
            if !(-1e-12..=PI + 1e-12).contains(&phi) {
                return Err(Error::InvalidParameter(format!("sweep angle {phi} outside [0, pi]")));
            }
            if detection_probability(phi, p_up, p_down, r)? == 0.0 {
                return Ok(CoherencePoint { phi, c_b: 0.0, c_s: 0.0 });
            }
            let s0 = conditional_spin_state(phi, p_up, p_down, r)?;
            let s = evolve_spin(&s0, at_tau, dynamics)?;
            let st = conditional_stokes(&s, r)?;
            Ok(CoherencePoint { phi, c_b: s.bloch_coherence(), c_s: st.coherence() })
        })
        .collect()
}

/// Conditional Stokes trace after an M-polarized detection.
pub fn stokes_trace(
    phi: f64,
    r: &ReflectionSet,
    dynamics: &SpinDynamicsParams,
    grid: &[f64],
) -> Result<StokesTrace> {
    let p_up = dynamics.rho_stationary.rho_uu();
    let s0 = conditional_spin_state(phi, p_up, 1.0 - p_up, r)?;
    let (mut hv, mut da, mut rl) = (vec![], vec![], vec![]);
    for &t in grid {
        let st = conditional_stokes(&evolve_spin(&s0, t, dynamics)?, r)?;
        hv.push(st.s_hv);
        da.push(st.s_da);
        rl.push(st.s_rl);
    }
    StokesTrace::new(grid.to_vec(), hv, da, rl)
}

pub fn bloch_trace(phi: f64, r: &ReflectionSet, dynamics: &SpinDynamicsParams, grid: &[f64]) -> Result<BlochTrace> {
    let p_up = dynamics.rho_stationary.rho_uu();
    let s0 = conditional_spin_state(phi, p_up, 1.0 - p_up, r)?;
    let (mut x, mut y, mut z) = (vec![], vec![], vec![]);
    for &t in grid {
        let b = evolve_spin(&s0, t, dynamics)?.bloch();
        x.push(b[0]);
        y.push(b[1]);
        z.push(b[2]);
    }
    BlochTrace::new(grid.to_vec(), x, y, z)
}

/// g²_{T|M}(τ) for τ ≥ 0 from the conditional spin evolution.
pub fn g2_trace(
    phi: f64,
    second: Polarization,
    r: &ReflectionSet,
    dynamics: &SpinDynamicsParams,
    grid: &[f64],
) -> Result<Vec<f64>> {
    g2_trace_pol(measurement_state(phi), second, r, dynamics, grid)
}

pub fn g2_trace_pol(
    first: Polarization,
    second: Polarization,
    r: &ReflectionSet,
    dynamics: &SpinDynamicsParams,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let p_up = dynamics.rho_stationary.rho_uu();
    let s0 = conditional_spin_state_pol(first, p_up, 1.0 - p_up, r)?;
    let p_t = photon_probability(&dynamics.rho_stationary, r, second);
    if !(p_t > 0.0) {
        return Err(Error::InvalidParameter("zero unconditional probability for second photon".into()));
    }
    grid.iter()
        .map(|&t| Ok(photon_probability(&evolve_spin(&s0, t, dynamics)?, r, second) / p_t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_set() -> ReflectionSet {
        ReflectionSet::from_reflectivities(0.69, 0.37, 0.06).unwrap()
    }

    #[test]
    fn detection_probability_limits() {
        let r = reference_set();
        let p0 = detection_probability(0.0, 0.51, 0.49, &r).unwrap();
        assert!((p0 - 0.49 * 0.06).abs() < 1e-15);
        let pv = detection_probability(PI, 0.51, 0.49, &r).unwrap();
        assert!((pv - (0.51 * 0.69 + 0.49 * 0.37)).abs() < 1e-15);
        assert!((pv - 0.533).abs() < 5e-4);
        assert!(detection_probability(0.5, 0.6, 0.6, &r).is_err());
    }

    #[test]
    fn projective_and_partial_conditioning() {
        let r = reference_set();
        let h = conditional_spin_state(0.0, 0.51, 0.49, &r).unwrap();
        assert_eq!(h.rho_uu(), 1.0);
        assert_eq!(h.rho_du(), C64::new(0.0, 0.0));
        let v = conditional_spin_state(PI, 0.51, 0.49, &r).unwrap();
        assert_eq!(v.rho_du(), C64::new(0.0, 0.0));
        let lit = 0.49 * 0.37 / (0.51 * 0.69 + 0.49 * 0.37);
        assert!((v.rho_dd() - lit).abs() < 1e-14);
        assert!((lit - 0.340).abs() < 1e-3);
    }

    #[test]
    fn zero_raman_channel_means_no_coherence() {
        let r = ReflectionSet::from_reflectivities(0.69, 0.37, 0.0).unwrap();
        let dynamics = SpinDynamicsParams::new(1.0, 1.0, 1.0, 0.5, Envelope::Gaussian).unwrap();
        let grid: Vec<f64> = (1..18).map(|k| k as f64 * PI / 18.0).collect();
        for p in coherence_sweep(&grid, 0.5, 0.5, &r, 0.0, &dynamics).unwrap() {
            assert_eq!(p.c_b, 0.0);
        }
    }

    #[test]
    fn general_conditioning_matches_linear_form() {
        let r = ReflectionSet::new(C64::new(0.6, 0.5), C64::new(0.55, -0.2), C64::new(-0.1, 0.22)).unwrap();
        for k in 0..=12 {
            let phi = k as f64 * PI / 12.0;
            let a = conditional_spin_state(phi, 0.51, 0.49, &r).unwrap();
            let b = conditional_spin_state_pol(measurement_state(phi), 0.51, 0.49, &r).unwrap();
            assert!((a.rho_uu() - b.rho_uu()).abs() < 1e-14);
            assert!((a.rho_du() - b.rho_du()).norm() < 1e-14);
        }
    }

    #[test]
    fn stokes_of_spin_up() {
        let r = reference_set();
        let up = SpinState::thermal(1.0).unwrap();
        let st = conditional_stokes(&up, &r).unwrap();
        assert_eq!(st.s_hv, -1.0);
        assert_eq!((st.s_da, st.s_rl), (0.0, 0.0));
    }
}
