use super::{GammaSpMode, SimulationConfig};
use crate::device::{level_structure_with_offset, output_field_operator, Pol, Polarization, TRANSITION_LEVELS, TRANSITION_POL};
use crate::error::{Error, Result};
use crate::qcore::ops::{annihilation, dagger, identity, ket_bra, kron_all, CMat, C64};
use crate::qcore::{build_lindblad, DensityOperator, JumpOperator, Liouvillian, Subsystem};

/// Dot levels: 0 = ↑, 1 = ↓, 2 = T1, 3 = T2.
pub const QD_DIM: usize = 4;
const MAX_CUTOFF_POPULATION: f64 = 1e-4;

/// Liouvillian plus the operators needed to read out fields and spin.
#[derive(Debug, Clone)]
pub struct Model {
    pub liouvillian: Liouvillian,
    pub cutoff: usize,
    pub a_h: CMat,
    pub a_v: CMat,
    /// Output fields b_H, b_V including the reflected drive.
    pub b_h: CMat,
    pub b_v: CMat,
    pub omega_laser: f64,
    pub beta: f64,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.liouvillian.dim()
    }

    /// |i⟩⟨j| on the dot, identity on the modes.
    pub fn qd_op(&self, i: usize, j: usize) -> CMat {
        let d = self.cutoff + 1;
        kron_all(&[&ket_bra(QD_DIM, i, j), &identity(d), &identity(d)])
    }

    pub fn output(&self, pol: Pol) -> &CMat {
        match pol {
            Pol::H => &self.b_h,
            Pol::V => &self.b_v,
        }
    }

    /// Detection operator conj(u_H) b_H + conj(u_V) b_V.
    pub fn detector(&self, pol: Polarization) -> CMat {
        let (ch, cv) = (pol.h.conj(), pol.v.conj());
        CMat::from_fn(self.dim(), self.dim(), |i, j| ch * self.b_h[(i, j)] + cv * self.b_v[(i, j)])
    }

    /// Population of basis states with either mode at the Fock cutoff.
    pub fn cutoff_population(&self, rho: &DensityOperator) -> f64 {
        let d = self.cutoff + 1;
        let m = rho.matrix();
        let mut p = 0.0;
        for q in 0..QD_DIM {
            for h in 0..d {
                for v in 0..d {
                    if h == self.cutoff || v == self.cutoff {
                        let k = (q * d + h) * d + v;
                        p += m[(k, k)].re;
                    }
                }
            }
        }
        p
    }

    /// Steady state with the Fock-cutoff validity check.
    pub fn steady_state(&self) -> Result<DensityOperator> {
        let rho = self.liouvillian.steady_state()?;
        let p = self.cutoff_population(&rho);
        if p > MAX_CUTOFF_POPULATION {
            return Err(Error::CutoffViolation(p));
        }
        Ok(rho)
    }
}

pub fn build_system(cfg: &SimulationConfig, overhauser_offset: f64) -> Result<Liouvillian> {
    Ok(build_model(cfg, overhauser_offset)?.liouvillian)
}

pub fn build_model(cfg: &SimulationConfig, overhauser_offset: f64) -> Result<Model> {
    cfg.validate()?;
    build_model_at(cfg, overhauser_offset, cfg.omega_laser())
}

pub(crate) fn build_model_at(cfg: &SimulationConfig, overhauser_offset: f64, omega_laser: f64) -> Result<Model> {
    let p = &cfg.params;
    let n = cfg.fock_cutoff;
    let d = n + 1;
    let id_q = identity(QD_DIM);
    let id_c = identity(d);
    let a = annihilation(n);
    let a_h = kron_all(&[&id_q, &a, &id_c]);
    let a_v = kron_all(&[&id_q, &id_c, &a]);
    let qd = |i: usize, j: usize| kron_all(&[&ket_bra(QD_DIM, i, j), &id_c, &id_c]);
    let dim = QD_DIM * d * d;

    let ls = level_structure_with_offset(p, overhauser_offset);
    let energies = ls.energies();
    let mut h = CMat::zeros(dim, dim);
    let add = |h: &mut CMat, m: &CMat, s: C64| {
        for j in 0..dim {
            for i in 0..dim {
                h[(i, j)] += m[(i, j)] * s;
            }
        }
    };
    let n_h = dagger(&a_h) * &a_h;
    let n_v = dagger(&a_v) * &a_v;
    add(&mut h, &n_h, C64::new(p.omega_h() - omega_laser, 0.0));
    add(&mut h, &n_v, C64::new(p.omega_v() - omega_laser, 0.0));
    for (q, e) in energies.iter().enumerate() {
        let shift = if q >= 2 { omega_laser } else { 0.0 };
        add(&mut h, &qd(q, q), C64::new(e - shift, 0.0));
    }
    for (t, &(g_idx, e_idx)) in TRANSITION_LEVELS.iter().enumerate() {
        let sigma = qd(g_idx, e_idx);
        let mode = if TRANSITION_POL[t] == Pol::H { &a_h } else { &a_v };
        let coupling = dagger(&sigma) * mode;
        add(&mut h, &coupling, C64::new(p.g, 0.0));
        add(&mut h, &dagger(&coupling), C64::new(p.g, 0.0));
    }
    let beta = p.input_amplitude();
    let eps = (p.eta_top_v * p.kappa_v).sqrt() * beta;
    // i ε (a_V† − a_V)
    let drive = &dagger(&a_v) - &a_v;
    add(&mut h, &drive, C64::new(0.0, eps));

    let mut jumps = vec![JumpOperator::new(a_h.clone(), p.kappa_h), JumpOperator::new(a_v.clone(), p.kappa_v)];
    let gsp = match cfg.gamma_sp_mode {
        GammaSpMode::PerTransition => p.gamma_sp,
        GammaSpMode::Total => p.gamma_sp / 2.0,
    };
    for &(g_idx, e_idx) in &TRANSITION_LEVELS {
        jumps.push(JumpOperator::new(qd(g_idx, e_idx), gsp));
    }
    for e in [2, 3] {
        jumps.push(JumpOperator::new(qd(e, e), 2.0 * p.gamma_star));
    }
    let cot = 1.0 / (2.0 * p.tau_esc);
    jumps.push(JumpOperator::new(qd(0, 1), cot));
    jumps.push(JumpOperator::new(qd(1, 0), cot));

    let space = vec![Subsystem::new("qd", QD_DIM), Subsystem::new("cavity_h", d), Subsystem::new("cavity_v", d)];
    let liouvillian = build_lindblad(&h, &jumps)?.with_space(space)?;
    let b_h = output_field_operator(p, Polarization::h(), &a_h, &a_v, C64::new(beta, 0.0))?;
    let b_v = output_field_operator(p, Polarization::v(), &a_h, &a_v, C64::new(beta, 0.0))?;
    Ok(Model { liouvillian, cutoff: n, a_h, a_v, b_h, b_v, omega_laser, beta })
}
