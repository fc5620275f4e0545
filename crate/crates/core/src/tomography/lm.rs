//! Levenberg-Marquardt with Marquardt diagonal scaling.
//!
//! Damping schedule: start at λ = 1e-3; divide by 3 after an accepted step, multiply by 4
//! after a rejected one. Stops when the relative step falls below 1e-10 or the relative
//! cost change below 1e-12, and fails after 200 iterations.

use faer::prelude::Solve;
use faer::Mat;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
const STEP_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-12;

/// A least-squares problem with analytic Jacobian.
pub trait LeastSquares {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    /// Fills residuals (model − data) and the Jacobian of the model.
    fn evaluate(&self, p: &[f64], residuals: &mut [f64], jacobian: &mut Mat<f64>);
    fn admissible(&self, _p: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub struct LmSolution {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub std_errors: Vec<f64>,
    pub iterations: usize,
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

pub fn levenberg_marquardt<P: LeastSquares>(problem: &P, p0: &[f64]) -> Result<LmSolution> {
    let np = problem.n_params();
    let nr = problem.n_residuals();
    if p0.len() != np {
        return Err(Error::Fit("initial guess has wrong length".into()));
    }
    if nr < np {
        return Err(Error::Fit(format!("{nr} data points cannot determine {np} parameters")));
    }
    if !problem.admissible(p0) {
        return Err(Error::Fit("initial guess outside the admissible region".into()));
    }
    let mut p = p0.to_vec();
    let mut r = vec![0.0; nr];
    let mut j = Mat::<f64>::zeros(nr, np);
    problem.evaluate(&p, &mut r, &mut j);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::Fit("non-finite residuals at the initial guess".into()));
    }
    let mut lambda = 1e-3;
    let mut r_try = vec![0.0; nr];
    let mut j_try = Mat::<f64>::zeros(nr, np);
    let mut converged = cost == 0.0;
    let mut iterations = 0;

    while !converged {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::Fit(format!("no convergence within {MAX_ITERATIONS} iterations")));
        }
        let jtj = j.transpose() * &j;
        let mut grad = vec![0.0; np];
        for a in 0..np {
            grad[a] = (0..nr).map(|i| j[(i, a)] * r[i]).sum();
        }
        loop {
            let mut m = jtj.clone();
            for a in 0..np {
                m[(a, a)] += lambda * jtj[(a, a)].max(1e-300);
            }
            let rhs = Mat::<f64>::from_fn(np, 1, |a, _| -grad[a]);
            let step = m.partial_piv_lu().solve(&rhs);
            let delta: Vec<f64> = (0..np).map(|a| step[(a, 0)]).collect();
            let trial: Vec<f64> = p.iter().zip(&delta).map(|(x, d)| x + d).collect();
            let step_norm = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
            let p_norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            let ok = delta.iter().all(|d| d.is_finite()) && problem.admissible(&trial);
            let new_cost = if ok {
                problem.evaluate(&trial, &mut r_try, &mut j_try);
                cost_of(&r_try)
            } else {
                f64::INFINITY
            };
            if new_cost.is_finite() && new_cost <= cost {
                let rel_change = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                p = trial;
                std::mem::swap(&mut r, &mut r_try);
                std::mem::swap(&mut j, &mut j_try);
                cost = new_cost;
                lambda = (lambda / 3.0).max(1e-15);
                if step_norm <= STEP_TOL * (p_norm + STEP_TOL) || rel_change <= COST_TOL || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
            if step_norm <= STEP_TOL * (p_norm + STEP_TOL) {
                // No admissible descent left at machine precision.
                converged = true;
                break;
            }
            if lambda > 1e20 {
                return Err(Error::Fit("damping diverged without a descent step".into()));
            }
        }
    }

    let std_errors = standard_errors(&j, cost, nr, np);
    Ok(LmSolution { params: p, cost, std_errors, iterations })
}

/// sqrt(diag((JᵀJ)⁻¹) · cost/(N − p)).
pub fn standard_errors(j: &Mat<f64>, cost: f64, nr: usize, np: usize) -> Vec<f64> {
    let dof = (nr.saturating_sub(np)).max(1) as f64;
    let s2 = cost / dof;
    let jtj = j.transpose() * j;
    let inv = jtj.partial_piv_lu().solve(&Mat::<f64>::identity(np, np));
    (0..np).map(|a| (inv[(a, a)].abs() * s2).sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares for Line {
        fn n_params(&self) -> usize {
            2
        }
        fn n_residuals(&self) -> usize {
            self.x.len()
        }
        fn evaluate(&self, p: &[f64], r: &mut [f64], j: &mut Mat<f64>) {
            for (i, (&x, &y)) in self.x.iter().zip(&self.y).enumerate() {
                r[i] = p[0] + p[1] * x - y;
                j[(i, 0)] = 1.0;
                j[(i, 1)] = x;
            }
        }
    }

    #[test]
    fn linear_fit_is_exact() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y = x.iter().map(|x| 2.0 - 0.5 * x).collect();
        let s = levenberg_marquardt(&Line { x, y }, &[0.0, 0.0]).unwrap();
        assert!((s.params[0] - 2.0).abs() < 1e-12);
        assert!((s.params[1] + 0.5).abs() < 1e-12);
    }
}
