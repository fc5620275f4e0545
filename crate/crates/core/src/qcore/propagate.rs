use super::density::DensityOperator;
use super::expm::expm;
use super::liouvillian::Liouvillian;
use super::ops::{unvec, vec_of, CMat, C64};
use crate::error::{Error, Result};

/// Hilbert dimensions up to this use the dense exponential under `Auto`.
pub const EXPM_MAX_DIM: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Auto,
    Expm,
    Adaptive { rtol: f64, atol: f64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::Auto
    }
}

impl Method {
    pub const DEFAULT_ADAPTIVE: Method = Method::Adaptive { rtol: 1e-10, atol: 1e-13 };

    fn resolve(self, dim: usize) -> Method {
        match self {
            Method::Auto if dim <= EXPM_MAX_DIM => Method::Expm,
            Method::Auto => Method::DEFAULT_ADAPTIVE,
            m => m,
        }
    }
}

pub fn propagate(l: &Liouvillian, rho0: &DensityOperator, tau: f64) -> Result<DensityOperator> {
    propagate_with(l, rho0, tau, Method::Auto)
}

pub fn propagate_with(
    l: &Liouvillian,
    rho0: &DensityOperator,
    tau: f64,
    method: Method,
) -> Result<DensityOperator> {
    if rho0.dim() != l.dim() {
        return Err(Error::Dimension("state and Liouvillian dimensions differ".into()));
    }
    let x0 = column(&vec_of(rho0.matrix()));
    let mut out = None;
    evolve_columns(l, &x0, &[tau], method, |_, x| {
        out = Some(x.clone());
        Ok(())
    })?;
    let x = out.expect("single grid point visited");
    let flat: Vec<C64> = (0..x.nrows()).map(|i| x[(i, 0)]).collect();
    DensityOperator::new(unvec(&flat, l.dim()), rho0.space().to_vec())
}

/// `exp(L τ)` as a dense superoperator.
pub fn superoperator_exp(l: &Liouvillian, tau: f64) -> Result<CMat> {
    let m = l.matrix();
    expm(&CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * tau))
}

pub fn column(v: &[C64]) -> CMat {
    CMat::from_fn(v.len(), 1, |i, _| v[i])
}

/// Evolves each column of `x0` (vectorized operators) and visits every grid point in order.
/// The grid must be non-decreasing and non-negative.
pub fn evolve_columns<F>(l: &Liouvillian, x0: &CMat, grid: &[f64], method: Method, mut visit: F) -> Result<()>
where
    F: FnMut(usize, &CMat) -> Result<()>,
{
    let nn = l.dim() * l.dim();
    if x0.nrows() != nn {
        return Err(Error::Dimension("initial columns do not match Liouvillian".into()));
    }
    if let Some(bad) = grid.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::InvalidParameter(format!("grid point {bad} must be finite and >= 0")));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("grid must be non-decreasing".into()));
    }
    let method = method.resolve(l.dim());
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut cache: Vec<(f64, CMat)> = Vec::new();
    for (k, &target) in grid.iter().enumerate() {
        let dt = target - t;
        if dt > 0.0 {
            x = match method {
                Method::Expm => {
                    let idx = cache.iter().position(|(h, _)| (h - dt).abs() <= 1e-10 * dt);
                    let idx = match idx {
                        Some(i) => i,
                        None => {
                            cache.push((dt, superoperator_exp(l, dt)?));
                            if cache.len() > 4 {
                                cache.remove(0);
                            }
                            cache.len() - 1
                        }
                    };
                    &cache[idx].1 * &x
                }
                Method::Adaptive { rtol, atol } => dopri5(l.matrix(), &x, dt, rtol, atol)?,
                Method::Auto => unreachable!(),
            };
            t = target;
        }
        visit(k, &x)?;
    }
    Ok(())
}

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 1_000_000;

fn combo(x: &CMat, h: f64, terms: &[(f64, &CMat)]) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| {
        let mut acc = x[(i, j)];
        for (c, k) in terms {
            if *c != 0.0 {
                acc += k[(i, j)] * (h * c);
            }
        }
        acc
    })
}

fn dopri5(l: &CMat, x0: &CMat, span: f64, rtol: f64, atol: f64) -> Result<CMat> {
    let mut x = x0.clone();
    let mut t = 0.0;
    let lnorm = super::ops::norm_1(l).max(1e-300);
    let mut h = (0.5 / lnorm).min(span);
    let mut k1 = l * &x;
    let mut steps = 0;
    while t < span {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Convergence(format!("exceeded {MAX_STEPS} steps at t = {t:.3e}")));
        }
        let last = t + h >= span;
        if last {
            h = span - t;
        }
        let k2 = l * &combo(&x, h, &[(A21, &k1)]);
        let k3 = l * &combo(&x, h, &[(A31, &k1), (A32, &k2)]);
        let k4 = l * &combo(&x, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k5 = l * &combo(&x, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k6 = l * &combo(&x, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let xn = combo(&x, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = l * &xn;
        let mut err = 0.0f64;
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                let e = (k1[(i, j)] * E1
                    + k3[(i, j)] * E3
                    + k4[(i, j)] * E4
                    + k5[(i, j)] * E5
                    + k6[(i, j)] * E6
                    + k7[(i, j)] * E7)
                    * h;
                let sc = atol + rtol * x[(i, j)].norm().max(xn[(i, j)].norm());
                err = err.max(e.norm() / sc);
            }
        }
        if !err.is_finite() {
            return Err(Error::Convergence("non-finite error estimate".into()));
        }
        if err <= 1.0 {
            t = if last { span } else { t + h };
            x = xn;
            k1 = k7;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < span * 1e-15 {
            return Err(Error::Convergence(format!("step size underflow at t = {t:.3e}")));
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::liouvillian::{build_lindblad, JumpOperator};
    use crate::qcore::ops::{ket_bra, max_abs_diff, pauli_x, scale};

    #[test]
    fn expm_and_adaptive_agree() {
        let h = scale(&pauli_x(), C64::new(1.3, 0.0));
        let l = build_lindblad(
            &h,
            &[JumpOperator::new(ket_bra(2, 0, 1), 0.4), JumpOperator::new(ket_bra(2, 1, 1), 0.2)],
        )
        .unwrap();
        let rho0 = DensityOperator::single(ket_bra(2, 0, 0)).unwrap();
        for &tau in &[0.1, 1.0, 7.5] {
            let a = propagate_with(&l, &rho0, tau, Method::Expm).unwrap();
            let b = propagate_with(&l, &rho0, tau, Method::DEFAULT_ADAPTIVE).unwrap();
            assert!(max_abs_diff(a.matrix(), b.matrix()) < 1e-8);
        }
    }

    #[test]
    fn rejects_negative_time() {
        let l = build_lindblad(&ket_bra(2, 0, 0), &[]).unwrap();
        let rho0 = DensityOperator::single(ket_bra(2, 0, 0)).unwrap();
        assert!(propagate(&l, &rho0, -1.0).is_err());
    }
}
