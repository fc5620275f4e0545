use super::model::{build_model_at, Model};
use super::overhauser::{overhauser_average, Weighted};
use super::steady::{operating_point_from, steady_observables, OperatingPoint};
use super::{G2Normalization, SimulationConfig};
use crate::backaction::SpinState;
use crate::device::{empty_cavity_reflection, Pol, Polarization};
use crate::error::{Error, Result};
use crate::qcore::correlation::regression;
use crate::qcore::ops::{dagger, CMat, C64};
use crate::qcore::{CorrelationTrace, Method};
use crate::traces::{BlochTrace, StokesTrace};

const OBS_UP: usize = 4;
const OBS_DOWN: usize = 5;
const OBS_UP_DOWN: usize = 6;

/// Regression data for the four basis initial operators `b_j ρ b_k†` (j, k ∈ {H, V}) against the
/// field moments `b_l† b_m` and the ground-spin projectors, averaged over Overhauser nodes.
/// Every detection polarization pair is a linear combination of these entries.
#[derive(Debug, Clone)]
pub struct BasisTraces {
    pub tau: Vec<f64>,
    /// One 7×4 matrix per delay: rows `[b_H†b_H, b_H†b_V, b_V†b_H, b_V†b_V, |↑⟩⟨↑|, |↓⟩⟨↓|, |↓⟩⟨↑|]`
    /// (the last row yields ρ↑↓), columns `[HH, HV, VH, VV]`.
    pub table: Vec<CMat>,
    pub steady: OperatingPoint,
    pub p_charge: f64,
    /// Reflected amplitude ⟨b_V⟩ of the empty cavity.
    pub empty_field: C64,
    pub normalization: G2Normalization,
}

#[derive(Debug, Clone)]
struct NodeData {
    table: Vec<CMat>,
    steady: Vec<C64>,
    cutoff: f64,
}

impl Weighted for NodeData {
    fn scaled(&self, w: f64) -> Self {
        Self {
            table: self.table.iter().map(|m| m.scaled(w)).collect(),
            steady: self.steady.iter().map(|v| v * w).collect(),
            cutoff: self.cutoff,
        }
    }
    fn accumulate(&mut self, other: &Self) -> Result<()> {
        for (a, b) in self.table.iter_mut().zip(&other.table) {
            a.accumulate(b)?;
        }
        self.steady.iter_mut().zip(&other.steady).for_each(|(a, b)| *a += b);
        self.cutoff = self.cutoff.max(other.cutoff);
        Ok(())
    }
}

fn node_data(model: &Model, grid: &[f64]) -> Result<NodeData> {
    let rho = model.steady_state()?;
    let r = rho.matrix();
    let b = [&model.b_h, &model.b_v];
    let mut initials = Vec::with_capacity(4);
    for j in 0..2 {
        for k in 0..2 {
            initials.push(b[j] * r * dagger(b[k]));
        }
    }
    let mut observables = Vec::with_capacity(7);
    for l in 0..2 {
        for m in 0..2 {
            observables.push(dagger(b[l]) * b[m]);
        }
    }
    observables.push(model.qd_op(0, 0));
    observables.push(model.qd_op(1, 1));
    observables.push(model.qd_op(1, 0));
    let table = regression(&model.liouvillian, &initials, &observables, grid, Method::Expm)?;
    Ok(NodeData { table, steady: steady_observables(model, &rho), cutoff: model.cutoff_population(&rho) })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    crate::qcore::correlation::strictly_increasing_grid(grid)?;
    if grid[0] < 0.0 {
        return Err(Error::InvalidParameter("delays must be non-negative; negative delays come from swapping detections".into()));
    }
    Ok(())
}

fn weights(p: Polarization) -> [C64; 2] {
    [p.h, p.v]
}

impl BasisTraces {
    pub fn compute(cfg: &SimulationConfig, grid: &[f64]) -> Result<Self> {
        cfg.validate()?;
        check_grid(grid)?;
        let omega_laser = cfg.omega_laser();
        let mut beta = 0.0;
        let data = overhauser_average(cfg.params.gamma_e, cfg.overhauser_nodes, |delta| {
            let model = build_model_at(cfg, delta, omega_laser)?;
            beta = model.beta;
            node_data(&model, grid)
        })?;
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter("correlations need a non-zero drive".into()));
        }
        let steady = operating_point_from(&data.steady, omega_laser, beta, data.cutoff);
        let empty_field = empty_cavity_reflection(&cfg.params, Pol::V, omega_laser) * beta;
        Ok(Self {
            tau: grid.to_vec(),
            table: data.table,
            steady,
            p_charge: cfg.params.p_charge,
            empty_field,
            normalization: cfg.g2_normalization,
        })
    }

    /// Computes on the configured delay grid.
    pub fn compute_default(cfg: &SimulationConfig) -> Result<Self> {
        Self::compute(cfg, &cfg.tau_grid.points()?)
    }

    fn blended(&self) -> bool {
        self.normalization == G2Normalization::ChargeBlended
    }

    /// Mean detected flux ⟨b_T† b_T⟩ in polarization T.
    pub fn intensity(&self, t: Polarization) -> f64 {
        let ch = self.steady.intensity(t);
        if self.blended() {
            let e = (t.v.conj() * self.empty_field).norm_sqr();
            self.p_charge * ch + (1.0 - self.p_charge) * e
        } else {
            ch
        }
    }

    /// Unnormalized coincidence rate ⟨b_M† b_T† b_T b_M⟩(τ), charged dot only.
    fn charged_coincidence(&self, k: usize, first: Polarization, second: Polarization) -> f64 {
        let m = weights(first);
        let t = weights(second);
        let x = &self.table[k];
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..2 {
            for kk in 0..2 {
                let wi = m[j].conj() * m[kk];
                for l in 0..2 {
                    for mm in 0..2 {
                        acc += wi * t[l] * t[mm].conj() * x[(2 * l + mm, 2 * j + kk)];
                    }
                }
            }
        }
        acc.re
    }

    pub fn coincidence(&self, k: usize, first: Polarization, second: Polarization) -> f64 {
        let ch = self.charged_coincidence(k, first, second);
        if self.blended() {
            let em = (first.v.conj() * self.empty_field).norm_sqr();
            let et = (second.v.conj() * self.empty_field).norm_sqr();
            self.p_charge * ch + (1.0 - self.p_charge) * em * et
        } else {
            ch
        }
    }

    /// g²_{T|M}(τ) on the non-negative grid.
    pub fn g2(&self, first: Polarization, second: Polarization) -> Result<Vec<f64>> {
        let norm = self.intensity(first) * self.intensity(second);
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("zero single-photon rate in normalization".into()));
        }
        Ok((0..self.tau.len()).map(|k| self.coincidence(k, first, second) / norm).collect())
    }

    /// g²_{T|M} over negative and positive delays; τ < 0 uses g²_{M|T}(|τ|).
    pub fn g2_symmetric(&self, first: Polarization, second: Polarization) -> Result<CorrelationTrace> {
        let pos = self.g2(first, second)?;
        let neg = self.g2(second, first)?;
        let start = usize::from(self.tau[0] == 0.0);
        let mut tau = Vec::with_capacity(2 * self.tau.len());
        let mut vals = Vec::with_capacity(2 * self.tau.len());
        for k in (start..self.tau.len()).rev() {
            tau.push(-self.tau[k]);
            vals.push(neg[k]);
        }
        tau.extend_from_slice(&self.tau);
        vals.extend_from_slice(&pos);
        CorrelationTrace::new(tau, vals)
    }

    pub fn stokes(&self, first: Polarization) -> Result<StokesTrace> {
        let pairs = [
            (Polarization::h(), Polarization::v()),
            (Polarization::diagonal(), Polarization::antidiagonal()),
            (Polarization::right(), Polarization::left()),
        ];
        let mut comps: [Vec<f64>; 3] = Default::default();
        for k in 0..self.tau.len() {
            for (c, (t, tb)) in pairs.iter().enumerate() {
                let a = self.coincidence(k, first, *t);
                let b = self.coincidence(k, first, *tb);
                if !(a + b > 0.0) {
                    return Err(Error::Numerical("zero conditional reflectivity".into()));
                }
                comps[c].push((a - b) / (a + b));
            }
        }
        let [hv, da, rl] = comps;
        StokesTrace::new(self.tau.clone(), hv, da, rl)
    }

    /// Conditioned ground-spin state at grid index `k`.
    pub fn spin_state(&self, k: usize, first: Polarization) -> Result<SpinState> {
        let m = weights(first);
        let x = &self.table[k];
        let row = |r: usize| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..2 {
                for kk in 0..2 {
                    acc += m[j].conj() * m[kk] * x[(r, 2 * j + kk)];
                }
            }
            acc
        };
        let up = row(OBS_UP).re;
        let down = row(OBS_DOWN).re;
        let coh = row(OBS_UP_DOWN);
        let g = up + down;
        if !(g > 0.0) {
            return Err(Error::Numerical("conditioned state has no ground population".into()));
        }
        SpinState::from_elements(up / g, coh.conj() / g)
    }

    pub fn bloch(&self, first: Polarization) -> Result<BlochTrace> {
        let (mut x, mut y, mut z) = (vec![], vec![], vec![]);
        for k in 0..self.tau.len() {
            let b = self.spin_state(k, first)?.bloch();
            x.push(b[0]);
            y.push(b[1]);
            z.push(b[2]);
        }
        BlochTrace::new(self.tau.clone(), x, y, z)
    }
}

/// Six second-photon bases for one first-photon polarization.
pub type CorrelationSet = Vec<(&'static str, CorrelationTrace)>;

pub const BASES: [&str; 6] = ["H", "V", "D", "A", "R", "L"];

pub fn basis_polarization(name: &str) -> Option<Polarization> {
    Some(match name {
        "H" => Polarization::h(),
        "V" => Polarization::v(),
        "D" => Polarization::diagonal(),
        "A" => Polarization::antidiagonal(),
        "R" => Polarization::right(),
        "L" => Polarization::left(),
        _ => return None,
    })
}

impl BasisTraces {
    pub fn correlation_set(&self, first: Polarization) -> Result<CorrelationSet> {
        BASES
            .iter()
            .map(|&b| Ok((b, self.g2_symmetric(first, basis_polarization(b).expect("known basis"))?)))
            .collect()
    }
}

pub fn g2_correlation(cfg: &SimulationConfig, phi_first: f64, second: Polarization, grid: &[f64]) -> Result<CorrelationTrace> {
    let bt = BasisTraces::compute(cfg, grid)?;
    CorrelationTrace::new(grid.to_vec(), bt.g2(Polarization::linear(phi_first), second)?)
}

pub fn g2_symmetric(cfg: &SimulationConfig, phi_first: f64, second: Polarization) -> Result<CorrelationTrace> {
    BasisTraces::compute_default(cfg)?.g2_symmetric(Polarization::linear(phi_first), second)
}

pub fn conditional_stokes_sim(cfg: &SimulationConfig, phi: f64, grid: &[f64]) -> Result<StokesTrace> {
    BasisTraces::compute(cfg, grid)?.stokes(Polarization::linear(phi))
}

pub fn bloch_trace_sim(cfg: &SimulationConfig, phi: f64, grid: &[f64]) -> Result<BlochTrace> {
    BasisTraces::compute(cfg, grid)?.bloch(Polarization::linear(phi))
}
