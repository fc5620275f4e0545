//! Dense complex matrix helpers on top of `faer`.

use faer::Mat;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn zeros(n: usize, m: usize) -> CMat {
    Mat::zeros(n, m)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

/// Builds a matrix from row-major nested data.
pub fn from_rows(rows: &[Vec<C64>]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, m, |i, j| C64::new(rows[i][j], 0.0))
}

/// |i><j| in dimension n.
pub fn ket_bra(n: usize, i: usize, j: usize) -> CMat {
    let mut m = zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn transpose(a: &CMat) -> CMat {
    a.transpose().to_owned()
}

pub fn conj(a: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj())
}

pub fn scale(a: &CMat, s: C64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn add_scaled(acc: &mut CMat, a: &CMat, s: C64) {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc[(i, j)] += a[(i, j)] * s;
        }
    }
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = zeros(ar * br, ac * bc);
    for ja in 0..ac {
        for ia in 0..ar {
            let s = a[(ia, ja)];
            if s == ZERO {
                continue;
            }
            for jb in 0..bc {
                for ib in 0..br {
                    out[(ia * br + ib, ja * bc + jb)] = s * b[(ib, jb)];
                }
            }
        }
    }
    out
}

pub fn kron_all(factors: &[&CMat]) -> CMat {
    let mut acc = identity(1);
    for f in factors {
        acc = kron(&acc, f);
    }
    acc
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Max-norm of `a - a^dagger`.
pub fn hermiticity_error(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

/// Induced 1-norm (max column sum).
pub fn norm_1(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Column-stacked vectorization.
pub fn vec_of(a: &CMat) -> Vec<C64> {
    let (n, m) = (a.nrows(), a.ncols());
    let mut v = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            v.push(a[(i, j)]);
        }
    }
    v
}

pub fn unvec(v: &[C64], n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| v[j * n + i])
}

/// Annihilation operator truncated at `cutoff` photons.
pub fn annihilation(cutoff: usize) -> CMat {
    let d = cutoff + 1;
    let mut a = zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn pauli_x() -> CMat {
    from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> CMat {
    from_rows(&[vec![ZERO, -I], vec![I, ZERO]])
}

pub fn pauli_z() -> CMat {
    from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_matches_block_structure() {
        let a = from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = identity(2);
        let k = kron(&a, &b);
        assert_eq!(k[(0, 2)], C64::new(2.0, 0.0));
        assert_eq!(k[(3, 1)], C64::new(3.0, 0.0));
        assert_eq!(k[(1, 0)], ZERO);
    }

    #[test]
    fn annihilation_commutator_below_cutoff() {
        let a = annihilation(4);
        let comm = &a * dagger(&a) - dagger(&a) * &a;
        for n in 0..4 {
            assert!((comm[(n, n)] - ONE).norm() < 1e-14);
        }
    }

    #[test]
    fn vec_roundtrip() {
        let a = from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let v = vec_of(&a);
        assert_eq!(v[1], C64::new(3.0, 0.0));
        assert_eq!(max_abs_diff(&unvec(&v, 2), &a), 0.0);
    }
}
