//! Deterministic starting values: spectral peak for ω, log-envelope slope for the decay,
//! tail mean for the offset.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::backaction::Envelope;
use crate::error::{Error, Result};

pub(super) fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

pub(super) fn is_flat(v: &[f64]) -> bool {
    spread(v) < 1e-9
}

pub(super) fn tail_mean(v: &[f64]) -> f64 {
    let k = (v.len() / 5).max(1);
    v[v.len() - k..].iter().sum::<f64>() / k as f64
}

fn detrend(u: &[f64], y: &[f64]) -> Vec<f64> {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|x| (x - mu).powi(2)).sum();
    let suy: f64 = u.iter().zip(y).map(|(x, v)| (x - mu) * (v - my)).sum();
    let slope = if suu > 0.0 { suy / suu } else { 0.0 };
    u.iter().zip(y).map(|(x, v)| v - my - slope * (x - mu)).collect()
}

fn power(u: &[f64], y: &[f64], w: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, v) in u.iter().zip(y) {
        acc += Complex64::from_polar(*v, -w * x);
    }
    acc.norm_sqr()
}

fn line_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 3 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

pub(super) struct OscGuess {
    pub omega: f64,
    pub t2: f64,
}

pub(super) fn oscillation(u: &[f64], y: &[f64], envelope: Envelope) -> Result<OscGuess> {
    let n = u.len();
    let span = u[n - 1] - u[0];
    let du_min = u.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let yd = detrend(u, y);
    let w_min = 1.5 * 2.0 * PI / span;
    let w_max = PI / du_min;
    if !(w_max > w_min) {
        return Err(Error::Fit("grid too coarse to resolve an oscillation".into()));
    }
    let dw = 2.0 * PI / (8.0 * span);
    let mut best = (w_min, 0.0);
    let mut w = w_min;
    while w <= w_max {
        let p = power(u, &yd, w);
        if p > best.1 {
            best = (w, p);
        }
        w += dw;
    }
    // golden-section refinement of the peak
    let (mut a, mut b) = ((best.0 - dw).max(w_min * 0.5), best.0 + dw);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if power(u, &yd, c) > power(u, &yd, d) {
            b = d;
        } else {
            a = c;
        }
    }
    let omega = 0.5 * (a + b);

    // smoothed demodulation over one period
    let period_samples = ((2.0 * PI / omega) / (span / (n - 1) as f64)).round().max(1.0) as usize;
    let z: Vec<Complex64> = u.iter().zip(&yd).map(|(x, v)| Complex64::from_polar(*v, -omega * x)).collect();
    let half = period_samples / 2;
    let mut xs = Vec::new();
    let mut ls = Vec::new();
    let mut amps = Vec::new();
    for i in half..n.saturating_sub(half) {
        let lo = i - half;
        let hi = (i + half + 1).min(n);
        let m: Complex64 = z[lo..hi].iter().sum::<Complex64>() / (hi - lo) as f64;
        amps.push((u[i], 2.0 * m.norm()));
    }
    let amax = amps.iter().map(|a| a.1).fold(0.0, f64::max);
    for (x, a) in &amps {
        if *a > 0.2 * amax {
            xs.push(match envelope {
                Envelope::Gaussian => x * x,
                Envelope::Exponential => *x,
            });
            ls.push(a.ln());
        }
    }
    let t2 = match line_fit(&xs, &ls) {
        Some((s, _)) if s < 0.0 => match envelope {
            Envelope::Gaussian => 1.0 / (-s).sqrt(),
            Envelope::Exponential => -1.0 / s,
        },
        _ => span,
    };
    Ok(OscGuess { omega, t2: t2.clamp(span * 1e-3, span * 1e3) })
}

/// Amplitude and phase by linear least squares at fixed ω and T.
pub(super) fn component(u: &[f64], y: &[f64], omega: f64, t2: f64, envelope: Envelope) -> (f64, f64) {
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (x, v) in u.iter().zip(y) {
        let e = envelope.eval(*x, t2);
        let (s, c) = (omega * x).sin_cos();
        let row = [e * c, e * s, 1.0];
        for a in 0..3 {
            rhs[a] += row[a] * v;
            for b in 0..3 {
                m[a][b] += row[a] * row[b];
            }
        }
    }
    let mat = faer::Mat::<f64>::from_fn(3, 3, |a, b| m[a][b]);
    let r = faer::Mat::<f64>::from_fn(3, 1, |a, _| rhs[a]);
    use faer::prelude::Solve;
    let sol = mat.partial_piv_lu().solve(&r);
    let (alpha, beta) = (sol[(0, 0)], sol[(1, 0)]);
    if !alpha.is_finite() || !beta.is_finite() {
        return (spread(y) / 2.0, 0.0);
    }
    // α cos + β sin = A cos(ωu + θ) with α = A cos θ, β = −A sin θ
    (alpha.hypot(beta), (-beta).atan2(alpha))
}

pub(super) fn relaxation(u: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = u.len();
    let span = u[n - 1] - u[0];
    let c = tail_mean(y);
    let zmax = y.iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
    let mut xs = Vec::new();
    let mut ls = Vec::new();
    for (x, v) in u.iter().zip(y).take(n / 2 + 1) {
        let z = (v - c).abs();
        if z > 0.05 * zmax {
            xs.push(*x);
            ls.push(z.ln());
        }
    }
    let t = match line_fit(&xs, &ls) {
        Some((s, _)) if s < 0.0 => (-1.0 / s).clamp(span * 1e-3, span * 1e2),
        _ => span / 3.0,
    };
    let b = (y[0] - c) / (-u[0] / t).exp();
    (c, b, t)
}
