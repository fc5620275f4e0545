use super::{GammaSpMode, SimulationConfig};
use crate::device::level_structure;
use crate::error::{Error, Result};
use crate::qcore::correlation::regression;
use crate::qcore::ops::{annihilation, dagger, identity, ket_bra, kron, CMat, C64};
use crate::qcore::{build_lindblad, JumpOperator, Method};

/// 1/e decay time of the T1 trion population through transition 1 (V-mode Purcell channel
/// plus off-mode emission), starting from the excited dot and an empty cavity.
pub fn radiative_lifetime(cfg: &SimulationConfig) -> Result<f64> {
    let p = &cfg.params;
    let ls = level_structure(p);
    let a = kron(&identity(2), &annihilation(2));
    // level 0 = ↓, level 1 = T1
    let sigma = kron(&ket_bra(2, 0, 1), &identity(3));
    let excited = kron(&ket_bra(2, 1, 1), &identity(3));
    let n = a.nrows();
    let h = {
        let mut h = CMat::zeros(n, n);
        let n_op = dagger(&a) * &a;
        let coupling = dagger(&sigma) * &a;
        let det = p.omega_v() - ls.omega[0];
        for j in 0..n {
            for i in 0..n {
                h[(i, j)] = n_op[(i, j)] * det + (coupling[(i, j)] + coupling[(j, i)].conj()) * p.g;
            }
        }
        h
    };
    let gsp = match cfg.gamma_sp_mode {
        GammaSpMode::PerTransition => p.gamma_sp,
        GammaSpMode::Total => p.gamma_sp / 2.0,
    };
    let l = build_lindblad(
        &h,
        &[
            JumpOperator::new(a.clone(), p.kappa_v),
            JumpOperator::new(sigma, gsp),
            JumpOperator::new(excited.clone(), 2.0 * p.gamma_star),
        ],
    )?;
    let step = 1e-12;
    let grid: Vec<f64> = (0..=5000).map(|k| k as f64 * step).collect();
    let rho0 = {
        let mut m = CMat::zeros(n, n);
        // |T1, 0⟩
        m[(3, 3)] = C64::new(1.0, 0.0);
        m
    };
    let pop = regression(&l, &[rho0], &[excited], &grid, Method::Expm)?;
    let target = (-1.0f64).exp();
    for k in 1..grid.len() {
        let (a0, a1) = (pop[k - 1][(0, 0)].re, pop[k][(0, 0)].re);
        if a0 >= target && a1 < target {
            return Ok(grid[k - 1] + step * (a0 - target) / (a0 - a1));
        }
    }
    Err(Error::Numerical("trion population did not fall below 1/e within 5 ns".into()))
}
