use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Nodes and weights integrating against the standard normal density (Golub-Welsch).
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one quadrature node".into()));
    }
    if n == 1 {
        return Ok((vec![0.0], vec![1.0]));
    }
    let j = Mat::<f64>::from_fn(n, n, |r, c| {
        if r + 1 == c || c + 1 == r {
            (r.max(c) as f64).sqrt()
        } else {
            0.0
        }
    });
    let evd = j
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("quadrature eigen-solve: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|k| (s[k], u[(0, k)] * u[(0, k)])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Exact symmetry about zero.
    for k in 0..n / 2 {
        let (x, w) = (0.5 * (pairs[n - 1 - k].0 - pairs[k].0), 0.5 * (pairs[k].1 + pairs[n - 1 - k].1));
        pairs[k] = (-x, w);
        pairs[n - 1 - k] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(pairs.into_iter().map(|(x, w)| (x, w / total)).unzip())
}

/// Electron-frequency offsets δ_k = γ_e x_k with their weights.
pub fn overhauser_nodes(gamma_e: f64, nodes: usize) -> Result<Vec<(f64, f64)>> {
    if nodes % 2 == 0 {
        return Err(Error::InvalidParameter(format!("node count {nodes} must be odd")));
    }
    let (x, w) = gauss_hermite(nodes)?;
    Ok(x.into_iter().zip(w).map(|(x, w)| (gamma_e * x, w)).collect())
}

/// Quantities that can be averaged as weighted sums.
pub trait Weighted: Sized {
    fn scaled(&self, w: f64) -> Self;
    fn accumulate(&mut self, other: &Self) -> Result<()>;
}

impl Weighted for f64 {
    fn scaled(&self, w: f64) -> Self {
        self * w
    }
    fn accumulate(&mut self, other: &Self) -> Result<()> {
        *self += other;
        Ok(())
    }
}

impl<T: Weighted> Weighted for Vec<T> {
    fn scaled(&self, w: f64) -> Self {
        self.iter().map(|v| v.scaled(w)).collect()
    }
    fn accumulate(&mut self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Dimension("averaged traces differ in length".into()));
        }
        for (a, b) in self.iter_mut().zip(other) {
            a.accumulate(b)?;
        }
        Ok(())
    }
}

impl Weighted for crate::qcore::CMat {
    fn scaled(&self, w: f64) -> Self {
        crate::qcore::ops::scale(self, crate::qcore::C64::new(w, 0.0))
    }
    fn accumulate(&mut self, other: &Self) -> Result<()> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::Dimension("averaged matrices differ in shape".into()));
        }
        crate::qcore::ops::add_scaled(self, other, crate::qcore::C64::new(1.0, 0.0));
        Ok(())
    }
}

/// Averages `inner(δ)` over a static Gaussian electron-frequency offset of spread `gamma_e`.
/// Node order is fixed, so the result is deterministic.
pub fn overhauser_average<T, F>(gamma_e: f64, nodes: usize, mut inner: F) -> Result<T>
where
    T: Weighted,
    F: FnMut(f64) -> Result<T>,
{
    let mut acc: Option<T> = None;
    for (delta, w) in overhauser_nodes(gamma_e, nodes)? {
        let v = inner(delta)?.scaled(w);
        match acc.as_mut() {
            None => acc = Some(v),
            Some(a) => a.accumulate(&v)?,
        }
    }
    acc.ok_or_else(|| Error::InvalidParameter("no quadrature nodes".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_standard_normal() {
        let (x, w) = gauss_hermite(9).unwrap();
        let m = |k: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-14);
        assert!(m(1).abs() < 1e-14);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(16) - 2027025.0).abs() / 2027025.0 < 1e-9);
    }

    #[test]
    fn three_point_rule_is_known() {
        let (x, w) = gauss_hermite(3).unwrap();
        assert!((x[2] - 3f64.sqrt()).abs() < 1e-14);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-14);
        assert!((w[0] - 1.0 / 6.0).abs() < 1e-14);
    }
}
