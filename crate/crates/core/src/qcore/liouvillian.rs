use super::density::{total_dim, DensityOperator, Subsystem};
use super::ops::{dagger, hermiticity_error, max_abs, unvec, vec_of, CMat, C64, I, ONE, ZERO};
use crate::error::{Error, Result};

/// Collapse operator `c` with rate `gamma`; contributes `gamma * D[c]`.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    pub op: CMat,
    pub rate: f64,
}

impl JumpOperator {
    pub fn new(op: CMat, rate: f64) -> Self {
        Self { op, rate }
    }
}

/// Superoperator acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    matrix: CMat,
    dim: usize,
    space: Vec<Subsystem>,
}

const TRACE_PRESERVATION_TOL: f64 = 1e-9;
const STEADY_RESIDUAL_TOL: f64 = 1e-9;
const PIVOT_RATIO_TOL: f64 = 1e-11;

/// Assembles `L = I⊗K + conj(K)⊗I + Σ γ conj(c)⊗c` with `K = -iH - ½Σ γ c†c`.
pub fn build_lindblad(hamiltonian: &CMat, jumps: &[JumpOperator]) -> Result<Liouvillian> {
    let n = hamiltonian.nrows();
    if hamiltonian.ncols() != n {
        return Err(Error::Dimension("Hamiltonian must be square".into()));
    }
    let scale = max_abs(hamiltonian).max(1.0);
    let herm = hermiticity_error(hamiltonian);
    if herm > 1e-12 * scale {
        return Err(Error::NonHermitian(herm));
    }
    for j in jumps {
        if j.op.nrows() != n || j.op.ncols() != n {
            return Err(Error::Dimension("jump operator shape differs from Hamiltonian".into()));
        }
        if !(j.rate >= 0.0) || !j.rate.is_finite() {
            return Err(Error::InvalidParameter(format!("jump rate {} must be finite and >= 0", j.rate)));
        }
    }

    let mut k = CMat::from_fn(n, n, |i, j| -I * hamiltonian[(i, j)]);
    for j in jumps {
        let cdc = dagger(&j.op) * &j.op;
        for b in 0..n {
            for a in 0..n {
                k[(a, b)] -= 0.5 * j.rate * cdc[(a, b)];
            }
        }
    }

    let nn = n * n;
    let mut l = CMat::zeros(nn, nn);
    // I ⊗ K
    for blk in 0..n {
        for b in 0..n {
            for a in 0..n {
                l[(blk * n + a, blk * n + b)] += k[(a, b)];
            }
        }
    }
    // conj(K) ⊗ I
    for b in 0..n {
        for a in 0..n {
            let v = k[(a, b)].conj();
            if v == ZERO {
                continue;
            }
            for i in 0..n {
                l[(a * n + i, b * n + i)] += v;
            }
        }
    }
    for j in jumps {
        if j.rate == 0.0 {
            continue;
        }
        let c = &j.op;
        let nz: Vec<(usize, usize, C64)> = (0..n)
            .flat_map(|b| (0..n).map(move |a| (a, b)))
            .filter_map(|(a, b)| {
                let v = c[(a, b)];
                (v != ZERO).then_some((a, b, v))
            })
            .collect();
        for &(a1, b1, v1) in &nz {
            let w = v1.conj() * j.rate;
            for &(a2, b2, v2) in &nz {
                l[(a1 * n + a2, b1 * n + b2)] += w * v2;
            }
        }
    }

    let lv = Liouvillian { matrix: l, dim: n, space: vec![Subsystem::new("system", n)] };
    let drift = lv.trace_drift();
    if drift > TRACE_PRESERVATION_TOL * lv.scale() {
        return Err(Error::Numerical(format!("Liouvillian does not preserve trace: {drift:.3e}")));
    }
    Ok(lv)
}

impl Liouvillian {
    pub fn with_space(mut self, space: Vec<Subsystem>) -> Result<Self> {
        if total_dim(&space) != self.dim {
            return Err(Error::Dimension("space does not match Liouvillian dimension".into()));
        }
        self.space = space;
        Ok(self)
    }

    /// Wraps an existing superoperator matrix.
    pub fn from_matrix(matrix: CMat, space: Vec<Subsystem>) -> Result<Self> {
        let n = total_dim(&space);
        if matrix.nrows() != n * n || matrix.ncols() != n * n {
            return Err(Error::Dimension("superoperator shape does not match space".into()));
        }
        Ok(Self { matrix, dim: n, space })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> &[Subsystem] {
        &self.space
    }

    /// Largest entry magnitude, used to make tolerances relative.
    pub fn scale(&self) -> f64 {
        max_abs(&self.matrix).max(1.0)
    }

    /// `max |Tr[L(e_ab)]|` over basis elements.
    pub fn trace_drift(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for col in 0..n * n {
            let s: C64 = (0..n).map(|i| self.matrix[(i * n + i, col)]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let v = vec_of(rho);
        let col = CMat::from_fn(v.len(), 1, |i, _| v[i]);
        let out = &self.matrix * &col;
        let flat: Vec<C64> = (0..out.nrows()).map(|i| out[(i, 0)]).collect();
        unvec(&flat, self.dim)
    }

    /// Relative stationarity residual `‖L ρ‖ / scale`.
    pub fn stationarity_residual(&self, rho: &CMat) -> f64 {
        max_abs(&self.apply(rho)) / self.scale()
    }

    /// Largest real part of the spectrum. Dense eigen-solve, small systems only.
    pub fn spectral_abscissa(&self) -> Result<f64> {
        let ev = self
            .matrix
            .eigenvalues()
            .map_err(|e| Error::Numerical(format!("eigenvalue solver: {e:?}")))?;
        Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn steady_state(&self) -> Result<DensityOperator> {
        steady_state(self)
    }
}

/// Unique stationary state, solved with the trace condition replacing one row.
pub fn steady_state(l: &Liouvillian) -> Result<DensityOperator> {
    let n = l.dim;
    let nn = n * n;
    let s = l.scale();
    let mut a = l.matrix.clone();
    for col in 0..nn {
        a[(0, col)] = ZERO;
    }
    for i in 0..n {
        a[(0, i * n + i)] = C64::new(s, 0.0);
    }
    let mut rhs = CMat::zeros(nn, 1);
    rhs[(0, 0)] = C64::new(s, 0.0);

    let lu = a.partial_piv_lu();
    let u = lu.U();
    let mut umax = 0.0f64;
    let mut umin = f64::INFINITY;
    for i in 0..nn {
        let d = u[(i, i)].norm();
        umax = umax.max(d);
        umin = umin.min(d);
    }
    if !(umin > PIVOT_RATIO_TOL * umax) {
        // Partial pivoting can understate the conditioning; confirm with full pivoting.
        let full = a.full_piv_lu();
        let fu = full.U();
        let fmax = fu[(0, 0)].norm();
        let fmin = fu[(nn - 1, nn - 1)].norm();
        if !(fmin > PIVOT_RATIO_TOL * fmax) {
            return Err(Error::DegenerateSteadyState(format!(
                "pivot ratio {:.3e}",
                fmin / fmax.max(f64::MIN_POSITIVE)
            )));
        }
    }
    use faer::prelude::Solve;
    let x = lu.solve(&rhs);
    let flat: Vec<C64> = (0..nn).map(|i| x[(i, 0)]).collect();
    if flat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite steady state".into()));
    }
    let mut rho = unvec(&flat, n);
    // Remove the round-off anti-Hermitian part; the residual check below is on the result.
    for j in 0..n {
        for i in 0..=j {
            let avg = 0.5 * (rho[(i, j)] + rho[(j, i)].conj());
            rho[(i, j)] = avg;
            rho[(j, i)] = avg.conj();
        }
    }
    let tr: C64 = (0..n).map(|i| rho[(i, i)]).sum();
    if (tr - ONE).norm() > 1e-9 {
        return Err(Error::Numerical(format!("steady-state trace {tr}")));
    }
    let res = l.stationarity_residual(&rho);
    if res > STEADY_RESIDUAL_TOL {
        return Err(Error::Numerical(format!("steady-state residual {res:.3e}")));
    }
    DensityOperator::new(rho, l.space.clone())
}
