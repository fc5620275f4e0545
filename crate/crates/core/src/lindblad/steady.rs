use super::model::{build_model_at, Model, QD_DIM};
use super::overhauser::{overhauser_average, Weighted};
use super::SimulationConfig;
use crate::backaction::{ReflectionSet, SpinState};
use crate::device::{empty_cavity_reflection, Pol, Polarization};
use crate::error::{Error, Result};
use crate::qcore::ops::{dagger, CMat, C64};
use crate::qcore::{DensityOperator, Subsystem};

/// Overhauser-averaged steady-state expectations of the charged dot at one laser frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub omega_laser: f64,
    pub beta: f64,
    /// ⟨b_j† b_k⟩, index 0 = H, 1 = V.
    pub moments: [[C64; 2]; 2],
    /// ⟨b_V⟩ restricted to the spin sectors ↑, ↓: Tr[b_V Π_s ρ].
    pub sector_field: [C64; 2],
    /// Tr[(|↑⟩⟨↓| ⊗ 1) b_H† b_V ρ].
    pub raman_cross: C64,
    /// Dot populations ↑, ↓, T1, T2.
    pub populations: [f64; 4],
    /// ρ↑↓ of the dot.
    pub spin_coherence: C64,
    /// Largest cutoff-level population over the quadrature nodes.
    pub max_cutoff_population: f64,
}

impl OperatingPoint {
    /// Ground-manifold spin populations, renormalized.
    pub fn spin_populations(&self) -> (f64, f64) {
        let g = self.populations[0] + self.populations[1];
        (self.populations[0] / g, self.populations[1] / g)
    }

    pub fn trion_population(&self) -> f64 {
        self.populations[2] + self.populations[3]
    }

    /// ⟨b_T† b_T⟩ for a detection polarization T.
    pub fn intensity(&self, t: Polarization) -> f64 {
        let c = [t.h, t.v];
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..2 {
            for m in 0..2 {
                acc += c[l] * c[m].conj() * self.moments[l][m];
            }
        }
        acc.re
    }
}

#[derive(Debug, Clone)]
struct RawSteady {
    values: Vec<C64>,
    cutoff: f64,
}

impl Weighted for RawSteady {
    fn scaled(&self, w: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * w).collect(), cutoff: self.cutoff }
    }
    fn accumulate(&mut self, other: &Self) -> Result<()> {
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += b);
        self.cutoff = self.cutoff.max(other.cutoff);
        Ok(())
    }
}

fn expect(op: &CMat, rho: &CMat) -> C64 {
    let n = op.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += op[(i, j)] * rho[(j, i)];
        }
    }
    acc
}

pub(crate) fn steady_observables(model: &Model, rho: &DensityOperator) -> Vec<C64> {
    let r = rho.matrix();
    let b = [&model.b_h, &model.b_v];
    let mut v = Vec::with_capacity(16);
    for l in 0..2 {
        for m in 0..2 {
            v.push(expect(&(dagger(b[l]) * b[m]), r));
        }
    }
    for s in 0..2 {
        v.push(expect(&(&model.b_v * &model.qd_op(s, s)), r));
    }
    v.push(expect(&(model.qd_op(0, 1) * dagger(&model.b_h) * &model.b_v), r));
    for q in 0..QD_DIM {
        v.push(expect(&model.qd_op(q, q), r));
    }
    v.push(expect(&model.qd_op(1, 0), r));
    v
}

pub(crate) fn operating_point_from(values: &[C64], omega_laser: f64, beta: f64, cutoff: f64) -> OperatingPoint {
    OperatingPoint {
        omega_laser,
        beta,
        moments: [[values[0], values[1]], [values[2], values[3]]],
        sector_field: [values[4], values[5]],
        raman_cross: values[6],
        populations: [values[7].re, values[8].re, values[9].re, values[10].re],
        // Tr[|↓⟩⟨↑| ρ] = ρ↑↓
        spin_coherence: values[11],
        max_cutoff_population: cutoff,
    }
}

fn operating_point_at(cfg: &SimulationConfig, omega_laser: f64) -> Result<OperatingPoint> {
    cfg.validate()?;
    let mut beta = 0.0;
    let raw = overhauser_average(cfg.params.gamma_e, cfg.overhauser_nodes, |delta| {
        let model = build_model_at(cfg, delta, omega_laser)?;
        beta = model.beta;
        let rho = model.steady_state()?;
        let cutoff = model.cutoff_population(&rho);
        Ok(RawSteady { values: steady_observables(&model, &rho), cutoff })
    })?;
    Ok(operating_point_from(&raw.values, omega_laser, beta, raw.cutoff))
}

/// Steady state at the configured laser frequency.
pub fn operating_point(cfg: &SimulationConfig) -> Result<OperatingPoint> {
    operating_point_at(cfg, cfg.omega_laser())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectivityPoint {
    /// Laser detuning from the bare dot frequency, rad/s.
    pub detuning: f64,
    pub p_vv: f64,
    pub p_vh: f64,
    pub p_cav: f64,
}

/// Charge-blended reflectivities V→V and V→H against laser detuning from ω_QD.
pub fn unconditional_reflectivities(cfg: &SimulationConfig, detunings: &[f64]) -> Result<Vec<ReflectivityPoint>> {
    if !(cfg.params.drive_photon_rate > 0.0) {
        return Err(Error::InvalidParameter("reflectivities need a non-zero drive".into()));
    }
    let pc = cfg.params.p_charge;
    detunings
        .iter()
        .map(|&d| {
            if !d.is_finite() {
                return Err(Error::InvalidParameter("non-finite detuning".into()));
            }
            let w = cfg.params.delta_qd + d;
            let p_cav = empty_cavity_reflection(&cfg.params, Pol::V, w).norm_sqr();
            let (p_vv_ch, p_vh_ch) = if pc > 0.0 {
                let op = operating_point_at(cfg, w)?;
                let b2 = op.beta * op.beta;
                (op.moments[1][1].re / b2, op.moments[0][0].re / b2)
            } else {
                (0.0, 0.0)
            };
            Ok(ReflectivityPoint {
                detuning: d,
                p_vv: pc * p_vv_ch + (1.0 - pc) * p_cav,
                p_vh: pc * p_vh_ch,
                p_cav,
            })
        })
        .collect()
}

/// Reflection amplitudes of the charged dot at the configured laser frequency.
pub fn extract_reflection_set(cfg: &SimulationConfig) -> Result<ReflectionSet> {
    reflection_set_from(cfg, &operating_point(cfg)?)
}

/// Reflection amplitudes inferred from an already computed operating point.
pub fn reflection_set_from(cfg: &SimulationConfig, op: &OperatingPoint) -> Result<ReflectionSet> {
    if !(op.beta > 0.0) {
        return Err(Error::InvalidParameter("reflection extraction needs a non-zero drive".into()));
    }
    let b2 = op.beta * op.beta;
    let (p_up, p_down) = op.spin_populations();
    let r_cav = empty_cavity_reflection(&cfg.params, Pol::V, op.omega_laser);
    let uu = r_cav.norm_sqr();
    let p_vv = op.moments[1][1].re / b2;
    let p_vh = op.moments[0][0].re / b2;
    let du = p_vh / p_down;
    let dd = (p_vv - p_up * uu) / p_down;
    if dd < 0.0 {
        return Err(Error::InvalidParameter(format!("inferred |r_dd|^2 = {dd:.4} is negative")));
    }
    let phase = |z: C64| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
    let ph_uu = phase(op.sector_field[0]);
    let ph_dd = phase(op.sector_field[1]);
    let r_du = if du > 0.0 && op.raman_cross.norm() > 0.0 {
        ph_dd * phase(op.raman_cross).conj() * du.sqrt()
    } else {
        C64::new(0.0, 0.0)
    };
    ReflectionSet::new(ph_uu * uu.sqrt(), ph_dd * dd.sqrt(), r_du)
}

/// State right after one detection, Overhauser-averaged.
#[derive(Debug, Clone)]
pub struct ClickConditionedState {
    pub joint: DensityOperator,
    pub reduced_spin: SpinState,
    /// Detection probability per incident photon.
    pub click_probability: f64,
}

pub fn click_condition(cfg: &SimulationConfig, phi: f64) -> Result<ClickConditionedState> {
    click_condition_pol(cfg, Polarization::linear(phi))
}

pub fn click_condition_pol(cfg: &SimulationConfig, pol: Polarization) -> Result<ClickConditionedState> {
    Ok(click_condition_many(cfg, &[pol])?.remove(0))
}

/// Conditions on each polarization in turn, sharing one steady state per quadrature node.
pub fn click_condition_many(cfg: &SimulationConfig, pols: &[Polarization]) -> Result<Vec<ClickConditionedState>> {
    cfg.validate()?;
    let omega_laser = cfg.omega_laser();
    let mut space: Vec<Subsystem> = vec![];
    let mut beta = 0.0;
    let unnorm: Vec<CMat> = overhauser_average(cfg.params.gamma_e, cfg.overhauser_nodes, |delta| {
        let model = build_model_at(cfg, delta, omega_laser)?;
        let rho = model.steady_state()?;
        space = rho.space().to_vec();
        beta = model.beta;
        Ok(pols
            .iter()
            .map(|&pol| {
                let b = model.detector(pol);
                &b * rho.matrix() * dagger(&b)
            })
            .collect())
    })?;
    unnorm
        .into_iter()
        .map(|m| {
            let prob: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
            if !(prob > 0.0) || !(beta > 0.0) {
                return Err(Error::InvalidParameter("zero click probability".into()));
            }
            let joint = DensityOperator::new(crate::qcore::ops::scale(&m, C64::new(1.0 / prob, 0.0)), space.clone())?;
            let reduced_spin = ground_spin(&joint)?;
            Ok(ClickConditionedState { joint, reduced_spin, click_probability: prob / (beta * beta) })
        })
        .collect()
}

/// Dot reduced state projected on the ground manifold and renormalized.
pub(crate) fn ground_spin(joint: &DensityOperator) -> Result<SpinState> {
    let qd = joint.partial_trace(&[0])?;
    let m = qd.matrix();
    let g = m[(0, 0)].re + m[(1, 1)].re;
    if !(g > 0.0) {
        return Err(Error::Numerical("no ground-state population".into()));
    }
    SpinState::from_matrix(CMat::from_fn(2, 2, |i, j| m[(i, j)] / g))
}
