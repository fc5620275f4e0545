use faer::Side;

use super::ops::{hermiticity_error, trace, CMat, C64};
use crate::error::{Error, Result};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Named tensor factor of a Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

impl Subsystem {
    pub fn new(label: &str, dim: usize) -> Self {
        Self { label: label.to_string(), dim }
    }
}

pub fn total_dim(space: &[Subsystem]) -> usize {
    space.iter().map(|s| s.dim).product()
}

/// A validated density matrix with its tensor-product layout.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: CMat,
    space: Vec<Subsystem>,
}

impl DensityOperator {
    /// Validates trace, Hermiticity and positivity. Nothing is clipped.
    pub fn new(matrix: CMat, space: Vec<Subsystem>) -> Result<Self> {
        let rho = Self::unchecked(matrix, space)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Checks shapes only.
    pub fn unchecked(matrix: CMat, space: Vec<Subsystem>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Dimension(format!("{}x{} is not square", n, matrix.ncols())));
        }
        if total_dim(&space) != n {
            return Err(Error::Dimension(format!(
                "subsystem dims multiply to {}, matrix has dim {}",
                total_dim(&space),
                n
            )));
        }
        Ok(Self { matrix, space })
    }

    pub fn single(matrix: CMat) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, vec![Subsystem::new("system", n)])
    }

    pub fn pure(amplitudes: &[C64], space: Vec<Subsystem>) -> Result<Self> {
        let n = amplitudes.len();
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let m = CMat::from_fn(n, n, |i, j| amplitudes[i] * amplitudes[j].conj() / norm);
        Self::new(m, space)
    }

    pub fn validate(&self) -> Result<()> {
        let tr = trace(&self.matrix);
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace = {tr}")));
        }
        let h = hermiticity_error(&self.matrix);
        if h > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("Hermiticity error {h:.3e}")));
        }
        let min = self.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidDensity(format!("eigenvalue {min:.3e} below zero")));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let n = self.matrix.nrows();
        let herm = CMat::from_fn(n, n, |i, j| 0.5 * (self.matrix[(i, j)] + self.matrix[(j, i)].conj()));
        let ev = herm
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigenvalue solver: {e:?}")))?;
        Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn space(&self) -> &[Subsystem] {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn expectation(&self, op: &CMat) -> C64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += op[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).diagonal().column_vector().iter().map(|z| z.re).sum()
    }

    /// Partial trace keeping the subsystems at the given positions.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let k = self.space.len();
        if keep.iter().any(|&i| i >= k) {
            return Err(Error::Dimension("partial trace index out of range".into()));
        }
        let dims: Vec<usize> = self.space.iter().map(|s| s.dim).collect();
        let kept: Vec<Subsystem> = keep.iter().map(|&i| self.space[i].clone()).collect();
        let traced: Vec<usize> = (0..k).filter(|i| !keep.contains(i)).collect();
        let dk = total_dim(&kept);
        let dt: usize = traced.iter().map(|&i| dims[i]).product();

        let index = |kept_multi: &[usize], traced_multi: &[usize]| -> usize {
            let mut full = vec![0usize; k];
            for (p, &i) in keep.iter().enumerate() {
                full[i] = kept_multi[p];
            }
            for (p, &i) in traced.iter().enumerate() {
                full[i] = traced_multi[p];
            }
            full.iter().zip(&dims).fold(0, |acc, (&x, &d)| acc * d + x)
        };
        let split = |mut x: usize, ds: &[usize]| -> Vec<usize> {
            let mut out = vec![0; ds.len()];
            for p in (0..ds.len()).rev() {
                out[p] = x % ds[p];
                x /= ds[p];
            }
            out
        };
        let kd: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
        let td: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
        let mut out = CMat::zeros(dk, dk);
        for a in 0..dk {
            let am = split(a, &kd);
            for b in 0..dk {
                let bm = split(b, &kd);
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..dt {
                    let tm = split(t, &td);
                    acc += self.matrix[(index(&am, &tm), index(&bm, &tm))];
                }
                out[(a, b)] = acc;
            }
        }
        DensityOperator::unchecked(out, kept)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::ops::{from_real_rows, kron};

    #[test]
    fn rejects_bad_trace_and_negative_eigenvalue() {
        let m = from_real_rows(&[&[0.6, 0.0], &[0.0, 0.6]]);
        assert!(DensityOperator::single(m).is_err());
        let m = from_real_rows(&[&[1.1, 0.0], &[0.0, -0.1]]);
        assert!(matches!(DensityOperator::single(m), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = from_real_rows(&[&[0.25, 0.1], &[0.1, 0.75]]);
        let b = from_real_rows(&[&[0.5, 0.0, 0.0], &[0.0, 0.3, 0.0], &[0.0, 0.0, 0.2]]);
        let rho = DensityOperator::new(
            kron(&a, &b),
            vec![Subsystem::new("a", 2), Subsystem::new("b", 3)],
        )
        .unwrap();
        let ra = rho.partial_trace(&[0]).unwrap();
        let rb = rho.partial_trace(&[1]).unwrap();
        assert!(crate::qcore::ops::max_abs_diff(ra.matrix(), &a) < 1e-15);
        assert!(crate::qcore::ops::max_abs_diff(rb.matrix(), &b) < 1e-15);
    }
}
