//! Physical parameters of the charged dot in a polarization-split micropillar, derived level
//! structure, and cavity input-output helpers.
//!
//! Internal units are SI: angular frequencies in rad/s, times in s, field in T. Optical
//! frequencies are measured from the bare cavity centre, so only differences matter.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qcore::ops::{identity, CMat, C64};

/// Bohr magneton over Planck constant, Hz/T.
pub const MU_B_OVER_H: f64 = 13.996_244_936e9;

pub fn ghz(f: f64) -> f64 {
    2.0 * PI * f * 1e9
}

pub fn to_ghz(w: f64) -> f64 {
    w / (2.0 * PI * 1e9)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub kappa_h: f64,
    pub kappa_v: f64,
    pub eta_top_h: f64,
    pub eta_top_v: f64,
    /// ω_H − ω_V
    pub delta_c: f64,
    /// ω_QD − ω_c
    pub delta_qd: f64,
    pub g: f64,
    pub gamma_sp: f64,
    pub gamma_star: f64,
    pub g_e_perp: f64,
    pub g_h_perp: f64,
    pub b_field: f64,
    pub gamma_e: f64,
    pub tau_esc: f64,
    pub p_charge: f64,
    /// Incident photon flux in the V input channel, photons/s.
    pub drive_photon_rate: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            kappa_h: ghz(44.5),
            kappa_v: ghz(45.0),
            eta_top_h: 0.65,
            eta_top_v: 0.63,
            delta_c: ghz(36.4),
            delta_qd: ghz(-51.2),
            g: ghz(3.1),
            gamma_sp: ghz(0.157),
            gamma_star: ghz(0.024),
            g_e_perp: 0.48,
            g_h_perp: 0.10,
            b_field: 0.200,
            gamma_e: ghz(0.120),
            tau_esc: 4.1e-9,
            p_charge: 0.96,
            drive_photon_rate: 1.6e7,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("kappa_h", self.kappa_h), ("kappa_v", self.kappa_v), ("tau_esc", self.tau_esc)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("g", self.g),
            ("gamma_sp", self.gamma_sp),
            ("gamma_star", self.gamma_star),
            ("gamma_e", self.gamma_e),
            ("b_field", self.b_field),
            ("drive_photon_rate", self.drive_photon_rate),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("delta_c", self.delta_c), ("delta_qd", self.delta_qd), ("g_e_perp", self.g_e_perp), ("g_h_perp", self.g_h_perp)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        for (name, v) in [("eta_top_h", self.eta_top_h), ("eta_top_v", self.eta_top_v), ("p_charge", self.p_charge)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn omega_h(&self) -> f64 {
        self.delta_c / 2.0
    }

    pub fn omega_v(&self) -> f64 {
        -self.delta_c / 2.0
    }

    pub fn omega_mode(&self, mode: Pol) -> f64 {
        match mode {
            Pol::H => self.omega_h(),
            Pol::V => self.omega_v(),
        }
    }

    pub fn kappa(&self, mode: Pol) -> f64 {
        match mode {
            Pol::H => self.kappa_h,
            Pol::V => self.kappa_v,
        }
    }

    pub fn eta_top(&self, mode: Pol) -> f64 {
        match mode {
            Pol::H => self.eta_top_h,
            Pol::V => self.eta_top_v,
        }
    }

    /// Input amplitude β with |β|² equal to the photon flux.
    pub fn input_amplitude(&self) -> f64 {
        self.drive_photon_rate.sqrt()
    }

    /// Inhomogeneous spin coherence time √2/γ_e.
    pub fn t2_star(&self) -> f64 {
        2f64.sqrt() / self.gamma_e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pol {
    H,
    V,
}

/// Jones vector in the (H, V) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarization {
    pub h: C64,
    pub v: C64,
}

impl Polarization {
    pub fn new(h: C64, v: C64) -> Result<Self> {
        let n = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter("zero or non-finite Jones vector".into()));
        }
        Ok(Self { h: h / n, v: v / n })
    }

    /// cos(φ/2)|H> + sin(φ/2)|V>, exact at multiples of π.
    pub fn linear(phi: f64) -> Self {
        let (c, s) = half_angle(phi);
        Self { h: C64::new(c, 0.0), v: C64::new(s, 0.0) }
    }

    pub fn h() -> Self {
        Self::linear(0.0)
    }

    pub fn v() -> Self {
        Self::linear(PI)
    }

    pub fn diagonal() -> Self {
        let r = 0.5f64.sqrt();
        Self { h: C64::new(r, 0.0), v: C64::new(r, 0.0) }
    }

    pub fn antidiagonal() -> Self {
        let r = 0.5f64.sqrt();
        Self { h: C64::new(r, 0.0), v: C64::new(-r, 0.0) }
    }

    pub fn right() -> Self {
        let r = 0.5f64.sqrt();
        Self { h: C64::new(r, 0.0), v: C64::new(0.0, r) }
    }

    pub fn left() -> Self {
        let r = 0.5f64.sqrt();
        Self { h: C64::new(r, 0.0), v: C64::new(0.0, -r) }
    }

    pub fn component(&self, p: Pol) -> C64 {
        match p {
            Pol::H => self.h,
            Pol::V => self.v,
        }
    }
}

/// (cos φ/2, sin φ/2) with exact zeros when φ is an integer multiple of π.
pub fn half_angle(phi: f64) -> (f64, f64) {
    let r = phi / PI;
    let k = r.round();
    if (r - k).abs() < 1e-12 {
        let k = (k as i64).rem_euclid(4);
        return match k {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    ((phi / 2.0).cos(), (phi / 2.0).sin())
}

/// Energies (angular frequency) of the four dot levels and the derived optical transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStructure {
    pub e_up: f64,
    pub e_down: f64,
    pub e_trion_1: f64,
    pub e_trion_2: f64,
    /// ω₁..ω₄ of the transitions ↓–T1, ↑–T1, ↓–T2, ↑–T2.
    pub omega: [f64; 4],
    pub electron_zeeman: f64,
    pub hole_zeeman: f64,
}

/// Polarization of transitions 1..4 (index 0..3).
pub const TRANSITION_POL: [Pol; 4] = [Pol::V, Pol::H, Pol::H, Pol::V];
/// (ground, excited) level indices of each transition: 0 = ↑, 1 = ↓, 2 = T1, 3 = T2.
pub const TRANSITION_LEVELS: [(usize, usize); 4] = [(1, 2), (0, 2), (1, 3), (0, 3)];

impl LevelStructure {
    pub fn polarization_of(&self, transition: usize) -> Pol {
        TRANSITION_POL[transition]
    }

    pub fn larmor_period(&self) -> f64 {
        2.0 * PI / self.electron_zeeman
    }

    pub fn energies(&self) -> [f64; 4] {
        [self.e_up, self.e_down, self.e_trion_1, self.e_trion_2]
    }
}

pub fn electron_zeeman(params: &DeviceParams) -> f64 {
    2.0 * PI * params.g_e_perp * MU_B_OVER_H * params.b_field
}

pub fn hole_zeeman(params: &DeviceParams) -> f64 {
    2.0 * PI * params.g_h_perp * MU_B_OVER_H * params.b_field
}

pub fn level_structure(params: &DeviceParams) -> LevelStructure {
    level_structure_with_offset(params, 0.0)
}

/// Level structure with an extra electron splitting `overhauser` (rad/s) added to the Zeeman term.
pub fn level_structure_with_offset(params: &DeviceParams, overhauser: f64) -> LevelStructure {
    let de = electron_zeeman(params) + overhauser;
    let dh = hole_zeeman(params);
    let e_up = de / 2.0;
    let e_down = -de / 2.0;
    let e_trion_1 = params.delta_qd + dh / 2.0;
    let e_trion_2 = params.delta_qd - dh / 2.0;
    LevelStructure {
        e_up,
        e_down,
        e_trion_1,
        e_trion_2,
        omega: [e_trion_1 - e_down, e_trion_1 - e_up, e_trion_2 - e_down, e_trion_2 - e_up],
        electron_zeeman: de,
        hole_zeeman: dh,
    }
}

/// Transition 1 shifted by its dispersive coupling to the V mode.
pub fn dressed_omega_1(params: &DeviceParams) -> f64 {
    let w1 = level_structure(params).omega[0];
    let d = params.omega_v() - w1;
    w1 - params.g * params.g * d / (d * d + params.kappa_v * params.kappa_v / 4.0)
}

/// Single-sided cavity reflection `1 − η κ / (i(ω_mode − ω) + κ/2)`.
pub fn empty_cavity_reflection(params: &DeviceParams, mode: Pol, omega_laser: f64) -> C64 {
    let k = params.kappa(mode);
    let denom = C64::new(k / 2.0, params.omega_mode(mode) - omega_laser);
    C64::new(1.0, 0.0) - params.eta_top(mode) * k / denom
}

/// Weak-drive reflection of the V mode coupled to transition 1 only.
pub fn coupled_reflection_estimate(params: &DeviceParams, omega_laser: f64) -> C64 {
    let k = params.kappa_v;
    let w1 = level_structure(params).omega[0];
    let gamma_tot = params.gamma_sp + 2.0 * params.gamma_star;
    let dot = C64::new(gamma_tot / 2.0, w1 - omega_laser);
    let denom = C64::new(k / 2.0, params.omega_v() - omega_laser) + params.g * params.g / dot;
    C64::new(1.0, 0.0) - params.eta_top_v * k / denom
}

/// `conj(u_H) b_H + conj(u_V) b_V` with `b_X = β_X − √(η_X κ_X) a_X`; the drive enters V only.
pub fn output_field_operator(
    params: &DeviceParams,
    pol: Polarization,
    a_h: &CMat,
    a_v: &CMat,
    input_amplitude: C64,
) -> Result<CMat> {
    let n = a_h.nrows();
    if a_h.ncols() != n || a_v.nrows() != n || a_v.ncols() != n {
        return Err(Error::Dimension("mode operators must share one square space".into()));
    }
    let ch = pol.h.conj();
    let cv = pol.v.conj();
    let sh = (params.eta_top_h * params.kappa_h).sqrt();
    let sv = (params.eta_top_v * params.kappa_v).sqrt();
    let id = identity(n);
    Ok(CMat::from_fn(n, n, |i, j| {
        ch * (-sh * a_h[(i, j)]) + cv * (input_amplitude * id[(i, j)] - sv * a_v[(i, j)])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn larmor_period_of_defaults() {
        let ls = level_structure(&DeviceParams::default());
        let tl = ls.larmor_period();
        assert!((tl * 1e12 - 744.3).abs() < 0.5, "{tl}");
        assert!(((ls.omega[0] - ls.omega[1]) - ls.electron_zeeman).abs() < 1e-3);
    }

    #[test]
    fn zero_field_degenerate() {
        let p = DeviceParams { b_field: 0.0, ..Default::default() };
        let ls = level_structure(&p);
        assert_eq!(ls.electron_zeeman, 0.0);
        assert_eq!(ls.omega[0], ls.omega[1]);
        assert_eq!(ls.omega[2], ls.omega[3]);
    }

    #[test]
    fn impedance_matched_and_far_detuned() {
        let p = DeviceParams { eta_top_v: 0.5, ..Default::default() };
        assert!(empty_cavity_reflection(&p, Pol::V, p.omega_v()).norm() < 1e-15);
        let r = empty_cavity_reflection(&p, Pol::V, 1e20);
        assert!((r - 1.0).norm() < 1e-6);
        let q = DeviceParams::default();
        let r0 = empty_cavity_reflection(&q, Pol::H, q.omega_h());
        assert!((r0 - C64::new(1.0 - 2.0 * q.eta_top_h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_cavity_at_transition_one() {
        let p = DeviceParams::default();
        let w1 = level_structure(&p).omega[0];
        let r2 = empty_cavity_reflection(&p, Pol::V, w1).norm_sqr();
        assert!((r2 - 0.69).abs() < 0.02, "{r2}");
    }

    #[test]
    fn coupled_estimate_reduces_without_coupling() {
        let p = DeviceParams { g: 0.0, ..Default::default() };
        for k in -50..50 {
            let w = ghz(k as f64);
            assert!((coupled_reflection_estimate(&p, w) - empty_cavity_reflection(&p, Pol::V, w)).norm() < 1e-14);
        }
        let q = DeviceParams::default();
        let far = ghz(1e5);
        assert!((coupled_reflection_estimate(&q, far) - empty_cavity_reflection(&q, Pol::V, far)).norm() < 1e-6);
    }

    #[test]
    fn half_angle_exact_at_multiples_of_pi() {
        assert_eq!(half_angle(PI), (0.0, 1.0));
        assert_eq!(half_angle(0.0), (1.0, 0.0));
        assert_eq!(half_angle(2.0 * PI), (-1.0, 0.0));
    }
}
