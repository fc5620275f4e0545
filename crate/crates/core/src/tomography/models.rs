use faer::Mat;

use super::lm::LeastSquares;
use crate::backaction::Envelope;

/// Parameters `[ω, T, A₀, θ₀, c₀, A₁, θ₁, c₁, ...]` in scaled time.
pub(super) struct OscillationProblem<'a> {
    pub u: &'a [f64],
    pub ys: &'a [Vec<f64>],
    pub denom: &'a [f64],
    pub envelope: Envelope,
}

impl LeastSquares for OscillationProblem<'_> {
    fn n_params(&self) -> usize {
        2 + 3 * self.ys.len()
    }

    fn n_residuals(&self) -> usize {
        self.u.len() * self.ys.len()
    }

    fn admissible(&self, p: &[f64]) -> bool {
        p[0] > 0.0 && p[1] > 0.0 && p.iter().all(|v| v.is_finite())
    }

    fn evaluate(&self, p: &[f64], r: &mut [f64], j: &mut Mat<f64>) {
        let (w, t) = (p[0], p[1]);
        let n = self.u.len();
        for (k, y) in self.ys.iter().enumerate() {
            let (a, th, c) = (p[2 + 3 * k], p[3 + 3 * k], p[4 + 3 * k]);
            for i in 0..n {
                let u = self.u[i];
                let row = k * n + i;
                let e = self.envelope.eval(u, t);
                let de_dt = match self.envelope {
                    Envelope::Gaussian => e * 2.0 * u * u / (t * t * t),
                    Envelope::Exponential => e * u / (t * t),
                };
                let (s, co) = (w * u + th).sin_cos();
                let inv = 1.0 / self.denom[i];
                r[row] = a * e * co * inv + c - y[i];
                for col in 0..self.n_params() {
                    j[(row, col)] = 0.0;
                }
                j[(row, 0)] = -a * e * u * s * inv;
                j[(row, 1)] = a * de_dt * co * inv;
                j[(row, 2 + 3 * k)] = e * co * inv;
                j[(row, 3 + 3 * k)] = -a * e * s * inv;
                j[(row, 4 + 3 * k)] = 1.0;
            }
        }
    }
}

/// `(c + b x)/(1 + d x)`, `x = exp(−u/T)`; parameters `[c, b, T]` or `[c, b, d, T]`.
pub(super) struct RelaxationProblem<'a> {
    pub u: &'a [f64],
    pub y: &'a [f64],
    pub ratio: bool,
}

impl RelaxationProblem<'_> {
    fn unpack(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        if self.ratio {
            (p[0], p[1], p[2], p[3])
        } else {
            (p[0], p[1], 0.0, p[2])
        }
    }
}

impl LeastSquares for RelaxationProblem<'_> {
    fn n_params(&self) -> usize {
        if self.ratio {
            4
        } else {
            3
        }
    }

    fn n_residuals(&self) -> usize {
        self.u.len()
    }

    fn admissible(&self, p: &[f64]) -> bool {
        let (_, _, d, t) = self.unpack(p);
        // keep the denominator positive over the grid (x ≤ 1)
        t > 0.0 && d > -1.0 && p.iter().all(|v| v.is_finite())
    }

    fn evaluate(&self, p: &[f64], r: &mut [f64], j: &mut Mat<f64>) {
        let (c, b, d, t) = self.unpack(p);
        let tcol = if self.ratio { 3 } else { 2 };
        for (i, (&u, &y)) in self.u.iter().zip(self.y).enumerate() {
            let x = (-u / t).exp();
            let den = 1.0 + d * x;
            let num = c + b * x;
            r[i] = num / den - y;
            j[(i, 0)] = 1.0 / den;
            j[(i, 1)] = x / den;
            if self.ratio {
                j[(i, 2)] = -num * x / (den * den);
            }
            j[(i, tcol)] = (b - c * d) / (den * den) * x * u / (t * t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_jacobian<P: LeastSquares>(p: &P, x: &[f64]) {
        let (nr, np) = (p.n_residuals(), p.n_params());
        let mut r = vec![0.0; nr];
        let mut j = Mat::<f64>::zeros(nr, np);
        p.evaluate(x, &mut r, &mut j);
        for a in 0..np {
            let h = 1e-6 * x[a].abs().max(1e-3);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[a] += h;
            xm[a] -= h;
            let (mut rp, mut rm) = (vec![0.0; nr], vec![0.0; nr]);
            let mut jj = Mat::<f64>::zeros(nr, np);
            p.evaluate(&xp, &mut rp, &mut jj);
            p.evaluate(&xm, &mut rm, &mut jj);
            for i in 0..nr {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                let scale = j[(i, a)].abs().max(1e-3);
                assert!((fd - j[(i, a)]).abs() / scale < 1e-6, "param {a} row {i}: {fd} vs {}", j[(i, a)]);
            }
        }
    }

    #[test]
    fn oscillation_jacobian_matches_finite_differences() {
        let u: Vec<f64> = (0..40).map(|k| k as f64 * 0.025).collect();
        let denom: Vec<f64> = u.iter().map(|x| 1.0 + 0.3 * (-x / 0.2f64).exp()).collect();
        let ys = vec![vec![0.0; 40], vec![0.1; 40]];
        for env in [Envelope::Gaussian, Envelope::Exponential] {
            let p = OscillationProblem { u: &u, ys: &ys, denom: &denom, envelope: env };
            check_jacobian(&p, &[20.0, 0.1, 0.5, 0.3, 0.01, -0.4, 1.2, 0.02]);
        }
    }

    #[test]
    fn relaxation_jacobian_matches_finite_differences() {
        let u: Vec<f64> = (0..40).map(|k| k as f64 * 0.025).collect();
        let y = vec![0.0; 40];
        check_jacobian(&RelaxationProblem { u: &u, y: &y, ratio: true }, &[-0.4, 0.3, 0.2, 0.21]);
        check_jacobian(&RelaxationProblem { u: &u, y: &y, ratio: false }, &[-0.4, 0.3, 0.21]);
    }
}
