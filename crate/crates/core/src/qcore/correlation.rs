use super::density::DensityOperator;
use super::liouvillian::Liouvillian;
use super::ops::{dagger, hermiticity_error, max_abs, vec_of, CMat, C64};
use super::propagate::{evolve_columns, Method};
use crate::error::{Error, Result};

const STATIONARY_TOL: f64 = 1e-9;

/// Sampled real function of delay with a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTrace {
    pub tau: Vec<f64>,
    pub values: Vec<f64>,
}

impl CorrelationTrace {
    pub fn new(tau: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if tau.len() != values.len() {
            return Err(Error::Dimension(format!("{} delays, {} values", tau.len(), values.len())));
        }
        if tau.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite entry in trace".into()));
        }
        if tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("delay grid must be strictly increasing".into()));
        }
        Ok(Self { tau, values })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Linear interpolation; clamps outside the grid.
    pub fn at(&self, t: f64) -> f64 {
        let n = self.tau.len();
        if n == 0 {
            return f64::NAN;
        }
        if t <= self.tau[0] {
            return self.values[0];
        }
        if t >= self.tau[n - 1] {
            return self.values[n - 1];
        }
        let k = self.tau.partition_point(|&x| x <= t);
        let (t0, t1) = (self.tau[k - 1], self.tau[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1] * (1.0 - w) + self.values[k] * w
    }
}

pub fn strictly_increasing_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty delay grid".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("delay grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// `G(τ) = Tr[O e^{Lτ}(c ρ c†)]` on a non-negative grid.
pub fn two_time_correlation(
    l: &Liouvillian,
    rho_ss: &DensityOperator,
    collapse: &CMat,
    observable: &CMat,
    grid: &[f64],
) -> Result<CorrelationTrace> {
    let values = two_time_correlation_complex(l, rho_ss, collapse, observable, grid)?;
    let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if hermiticity_error(observable) <= 1e-12 * max_abs(observable).max(1.0) {
        if let Some(z) = values.iter().find(|z| z.im.abs() > 1e-9 * scale) {
            return Err(Error::Numerical(format!("correlation of Hermitian observable has imaginary part {}", z.im)));
        }
    }
    CorrelationTrace::new(grid.to_vec(), values.iter().map(|z| z.re).collect())
}

pub fn two_time_correlation_complex(
    l: &Liouvillian,
    rho_ss: &DensityOperator,
    collapse: &CMat,
    observable: &CMat,
    grid: &[f64],
) -> Result<Vec<C64>> {
    strictly_increasing_grid(grid)?;
    if grid[0] < 0.0 {
        return Err(Error::InvalidParameter("delays must be non-negative".into()));
    }
    let res = l.stationarity_residual(rho_ss.matrix());
    if res > STATIONARY_TOL {
        return Err(Error::NotStationary(res));
    }
    let x0 = collapse * rho_ss.matrix() * dagger(collapse);
    let table = regression(l, &[x0], &[observable.clone()], grid, Method::Auto)?;
    Ok(table.into_iter().map(|m| m[(0, 0)]).collect())
}

/// Row vector `vec(Oᵀ)ᵀ` so that `row · vec(X) = Tr[O X]`.
pub fn trace_functional(observables: &[CMat]) -> CMat {
    let n = observables.first().map_or(0, |o| o.nrows());
    let mut out = CMat::zeros(observables.len(), n * n);
    for (r, o) in observables.iter().enumerate() {
        for j in 0..n {
            for i in 0..n {
                out[(r, j * n + i)] = o[(j, i)];
            }
        }
    }
    out
}

/// `Tr[O_a e^{Lτ} X_b]` for every delay, returned as one `(observables × initials)` matrix per delay.
pub fn regression(
    l: &Liouvillian,
    initials: &[CMat],
    observables: &[CMat],
    grid: &[f64],
    method: Method,
) -> Result<Vec<CMat>> {
    let n = l.dim();
    if initials.iter().chain(observables).any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::Dimension("operator dimension differs from Liouvillian".into()));
    }
    let mut x0 = CMat::zeros(n * n, initials.len());
    for (c, x) in initials.iter().enumerate() {
        for (i, v) in vec_of(x).into_iter().enumerate() {
            x0[(i, c)] = v;
        }
    }
    let obs = trace_functional(observables);
    let mut out = Vec::with_capacity(grid.len());
    evolve_columns(l, &x0, grid, method, |_, x| {
        out.push(&obs * x);
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::liouvillian::{build_lindblad, JumpOperator};
    use crate::qcore::ops::{ket_bra, pauli_x, scale};

    /// Resonance fluorescence g2 on resonance, closed form for Ω > γ/4.
    fn mollow_g2(omega: f64, gamma: f64, tau: f64) -> f64 {
        let mu = (omega * omega - gamma * gamma / 16.0).sqrt();
        1.0 - (-0.75 * gamma * tau).exp() * ((mu * tau).cos() + 3.0 * gamma / (4.0 * mu) * (mu * tau).sin())
    }

    #[test]
    fn resonance_fluorescence_g2() {
        let (omega, gamma) = (2.0, 1.0);
        let h = scale(&pauli_x(), C64::new(omega / 2.0, 0.0));
        let sm = ket_bra(2, 0, 1);
        let l = build_lindblad(&h, &[JumpOperator::new(sm.clone(), gamma)]).unwrap();
        let rho = l.steady_state().unwrap();
        let n = dagger(&sm) * &sm;
        let grid: Vec<f64> = (0..60).map(|k| k as f64 * 0.2).collect();
        let g = two_time_correlation(&l, &rho, &sm, &n, &grid).unwrap();
        let pe = rho.expectation(&n).re;
        for (t, v) in g.tau.iter().zip(&g.values) {
            let g2 = v / (pe * pe);
            assert!((g2 - mollow_g2(omega, gamma, *t)).abs() < 1e-10, "tau {t}: {g2}");
        }
    }

    #[test]
    fn non_stationary_state_rejected() {
        let h = scale(&pauli_x(), C64::new(0.5, 0.0));
        let sm = ket_bra(2, 0, 1);
        let l = build_lindblad(&h, &[JumpOperator::new(sm.clone(), 1.0)]).unwrap();
        let rho = DensityOperator::single(ket_bra(2, 1, 1)).unwrap();
        let r = two_time_correlation(&l, &rho, &sm, &ket_bra(2, 1, 1), &[0.0, 1.0]);
        assert!(matches!(r, Err(Error::NotStationary(_))));
    }
}
