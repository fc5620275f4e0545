//! Recovery of ω_L, T1 and T2* from conditional Stokes traces by nonlinear least squares.
//!
//! Oscillating components follow `A·env(τ)·cos(ωτ + θ)/n(τ) + c` and the population component
//! follows `(c + b·x)/(1 + d·x)` with `x = exp(−τ/T1)`. With `d = 0` the latter is a plain
//! exponential. When fitted jointly, `n(τ) = 1 + d·exp(−τ/T1)` carries the relaxing total
//! reflectivity over to the oscillating components.

mod guess;
pub mod lm;
mod models;

use std::f64::consts::PI;

pub use crate::backaction::Envelope;
use crate::error::{Error, Result};
use crate::traces::{StokesComponent, StokesTrace};
use lm::levenberg_marquardt;
use models::{OscillationProblem, RelaxationProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelaxationModel {
    Exponential,
    #[default]
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub envelope: Envelope,
    /// Points with τ below this are ignored (seconds).
    pub exclude_before: f64,
    /// Oscillating components are fitted only up to this delay (seconds). The default of
    /// 6 ns is about three Gaussian T2* at the nominal Overhauser width; beyond it the
    /// 9-node quadrature of the simulation produces revivals.
    pub oscillation_until: Option<f64>,
    pub relaxation_model: RelaxationModel,
    /// Delay at which C_S is evaluated (seconds).
    pub at_tau: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { envelope: Envelope::Gaussian, exclude_before: 1e-9,
            oscillation_until: Some(6e-9),
            relaxation_model: RelaxationModel::Ratio, at_tau: 0.0 }
    }
}

/// Initial values for an oscillation fit; `None` entries come from the data.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InitialGuess {
    pub omega: Option<f64>,
    pub t2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentFit {
    pub amplitude: f64,
    /// Reduced to (−π, π].
    pub phase: f64,
    pub offset: f64,
    pub amplitude_err: f64,
    pub phase_err: f64,
    pub offset_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationFit {
    pub omega: f64,
    pub t2: f64,
    pub omega_err: f64,
    pub t2_err: f64,
    pub envelope: Envelope,
    pub components: Vec<ComponentFit>,
    /// Fixed denominator `(d, T1)`, if any.
    pub normalization: Option<(f64, f64)>,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl OscillationFit {
    fn denominator(&self, tau: f64) -> f64 {
        self.normalization.map_or(1.0, |(d, t1)| 1.0 + d * (-tau / t1).exp())
    }

    /// Offset-free oscillating part of component `k`.
    pub fn oscillation(&self, k: usize, tau: f64) -> f64 {
        let c = &self.components[k];
        c.amplitude * self.envelope.eval(tau, self.t2) * (self.omega * tau + c.phase).cos() / self.denominator(tau)
    }

    pub fn model(&self, k: usize, tau: f64) -> f64 {
        self.oscillation(k, tau) + self.components[k].offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationFit {
    pub t1: f64,
    pub t1_err: f64,
    pub offset: f64,
    pub amplitude: f64,
    /// Denominator coefficient; zero for the exponential model.
    pub d: f64,
    pub model: RelaxationModel,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl RelaxationFit {
    pub fn eval(&self, tau: f64) -> f64 {
        let x = (-tau / self.t1).exp();
        (self.offset + self.amplitude * x) / (1.0 + self.d * x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub omega_l: Option<f64>,
    pub t1: f64,
    pub t2_star: Option<f64>,
    pub relaxation: RelaxationFit,
    /// Components are ordered DA, RL. `None` when no oscillation is present.
    pub oscillation: Option<OscillationFit>,
    /// Distance of the DA/RL phase difference from ±π/2 (rad).
    pub quadrature_error: Option<f64>,
    pub options: FitOptions,
}

impl FitResult {
    pub fn larmor_period(&self) -> Option<f64> {
        self.omega_l.map(|w| 2.0 * PI / w)
    }

    /// Residuals (data − model) per component on the full grid.
    pub fn residuals(&self, stokes: &StokesTrace) -> [Vec<f64>; 3] {
        let hv = stokes.tau.iter().zip(&stokes.s_hv).map(|(t, y)| y - self.relaxation.eval(*t)).collect();
        let osc = |k: usize, ys: &[f64]| -> Vec<f64> {
            stokes
                .tau
                .iter()
                .zip(ys)
                .map(|(t, y)| match &self.oscillation {
                    Some(o) => y - o.model(k, *t),
                    None => *y,
                })
                .collect()
        };
        [hv, osc(0, &stokes.s_da), osc(1, &stokes.s_rl)]
    }
}

pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

fn select(tau: &[f64], y: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if tau.len() != y.len() {
        return Err(Error::Dimension("delay grid and data differ in length".into()));
    }
    let (t, v): (Vec<f64>, Vec<f64>) =
        tau.iter().zip(y).filter(|(t, _)| **t >= window.0 && **t <= window.1).map(|(t, v)| (*t, *v)).unzip();
    if t.len() < 8 {
        return Err(Error::InvalidParameter(format!(
            "fit window [{:.3e}, {:.3e}] s leaves {} points",
            window.0,
            window.1,
            t.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite sample in trace".into()));
    }
    Ok((t, v))
}

fn time_scale(tau: &[f64]) -> f64 {
    let span = tau[tau.len() - 1] - tau[0];
    if span > 0.0 {
        span
    } else {
        1.0
    }
}

/// Single-component damped cosine fit with the denominator fixed to 1.
pub fn fit_damped_oscillation(
    tau: &[f64],
    y: &[f64],
    envelope: Envelope,
    guess: InitialGuess,
) -> Result<OscillationFit> {
    fit_oscillations(tau, &[y], envelope, guess, None, (f64::NEG_INFINITY, f64::INFINITY))
}

/// Joint fit of several components sharing ω and T2.
pub fn fit_oscillations(
    tau: &[f64],
    ys: &[&[f64]],
    envelope: Envelope,
    guess: InitialGuess,
    normalization: Option<(f64, f64)>,
    window: (f64, f64),
) -> Result<OscillationFit> {
    let mut sel_t = Vec::new();
    let mut sel_y = Vec::new();
    for y in ys {
        let (t, v) = select(tau, y, window)?;
        sel_t = t;
        sel_y.push(v);
    }
    let ts = time_scale(&sel_t);
    let u: Vec<f64> = sel_t.iter().map(|t| t / ts).collect();
    let norm_u = normalization.map(|(d, t1)| (d, t1 / ts));
    let denom: Vec<f64> = u.iter().map(|&x| norm_u.map_or(1.0, |(d, t1)| 1.0 + d * (-x / t1).exp())).collect();

    // Undo the known denominator before guessing.
    let flat: Vec<Vec<f64>> = sel_y.iter().map(|v| v.iter().zip(&denom).map(|(y, n)| y * n).collect()).collect();
    if flat.iter().all(|v| guess::is_flat(v)) {
        return Err(Error::NoOscillation);
    }
    let lead = flat
        .iter()
        .enumerate()
        .max_by(|a, b| guess::spread(a.1).total_cmp(&guess::spread(b.1)))
        .map(|(k, _)| k)
        .expect("at least one component");
    let g = guess::oscillation(&u, &flat[lead], envelope)?;
    let omega0 = guess.omega.map_or(g.omega, |w| w * ts);
    let t2_0 = guess.t2.map_or(g.t2, |t| t / ts);
    let span = u[u.len() - 1] - u[0];
    if span * omega0 < 4.0 * 2.0 * PI && span < 2.0 * t2_0 {
        return Err(Error::InvalidParameter(
            "grid covers fewer than 4 periods and fewer than 2 decay constants".into(),
        ));
    }
    let mut p0 = vec![omega0, t2_0];
    for v in &flat {
        let cg = guess::component(&u, v, omega0, t2_0, envelope);
        let offset = guess::tail_mean(v) / denom[denom.len() - 1];
        p0.extend_from_slice(&[cg.0, cg.1, offset]);
    }
    let problem = OscillationProblem { u: &u, ys: &sel_y, denom: &denom, envelope };
    let sol = levenberg_marquardt(&problem, &p0)?;
    let p = &sol.params;
    let e = &sol.std_errors;
    let mut components = Vec::with_capacity(ys.len());
    for k in 0..ys.len() {
        let (mut a, mut th) = (p[2 + 3 * k], p[3 + 3 * k]);
        if a < 0.0 {
            a = -a;
            th += PI;
        }
        components.push(ComponentFit {
            amplitude: a,
            phase: wrap_phase(th),
            offset: p[4 + 3 * k],
            amplitude_err: e[2 + 3 * k],
            phase_err: e[3 + 3 * k],
            offset_err: e[4 + 3 * k],
        });
    }
    let fit = OscillationFit {
        omega: p[0] / ts,
        t2: p[1] * ts,
        omega_err: e[0] / ts,
        t2_err: e[1] * ts,
        envelope,
        components,
        normalization,
        residual_norm: sol.cost.sqrt(),
        iterations: sol.iterations,
    };
    let significant = fit.components.iter().any(|c| c.amplitude > 3.0 * c.amplitude_err);
    if !significant {
        return Err(Error::NoOscillation);
    }
    Ok(fit)
}

/// Fit of the population component on τ ≥ `exclude_before`.
pub fn fit_relaxation(tau: &[f64], y: &[f64], exclude_before: f64, model: RelaxationModel) -> Result<RelaxationFit> {
    let (t, v) = select(tau, y, (exclude_before, f64::INFINITY))?;
    let ts = time_scale(&t);
    let u: Vec<f64> = t.iter().map(|x| x / ts).collect();
    if guess::is_flat(&v) {
        return Err(Error::Fit("flat trace carries no relaxation".into()));
    }
    let (c0, b0, t0) = guess::relaxation(&u, &v);
    let exp_problem = RelaxationProblem { u: &u, y: &v, ratio: false };
    let first = levenberg_marquardt(&exp_problem, &[c0, b0, t0])?;
    // The ratio model is near-degenerate when the trace covers little of the decay; the
    // exponential solution is then reported instead, with `model` saying so.
    let (sol, model) = match model {
        RelaxationModel::Exponential => (first, model),
        RelaxationModel::Ratio => {
            let ratio_problem = RelaxationProblem { u: &u, y: &v, ratio: true };
            let p = &first.params;
            match levenberg_marquardt(&ratio_problem, &[p[0], p[1], 0.0, p[2]]) {
                Ok(sol) => (sol, model),
                Err(Error::Fit(_)) => (first, RelaxationModel::Exponential),
                Err(e) => return Err(e),
            }
        }
    };
    let p = &sol.params;
    let (c, b, d, t1, t1_err) = match model {
        RelaxationModel::Exponential => (p[0], p[1], 0.0, p[2], sol.std_errors[2]),
        RelaxationModel::Ratio => (p[0], p[1], p[2], p[3], sol.std_errors[3]),
    };
    Ok(RelaxationFit {
        t1: t1 * ts,
        t1_err: t1_err * ts,
        offset: c,
        amplitude: b,
        d,
        model,
        residual_norm: sol.cost.sqrt(),
        iterations: sol.iterations,
    })
}

/// Relaxation from s_HV, then the DA/RL pair jointly with shared ω and T2*.
pub fn extract_all(stokes: &StokesTrace, opts: &FitOptions) -> Result<FitResult> {
    let tag = |c: StokesComponent| move |e: Error| match e {
        Error::NoOscillation => Error::NoOscillation,
        other => Error::Fit(format!("{c}: {other}")),
    };
    let relaxation = fit_relaxation(&stokes.tau, &stokes.s_hv, opts.exclude_before, opts.relaxation_model)
        .map_err(tag(StokesComponent::Hv))?;
    let norm = (relaxation.d != 0.0).then_some((relaxation.d, relaxation.t1));
    let oscillation = match fit_oscillations(
        &stokes.tau,
        &[&stokes.s_da, &stokes.s_rl],
        opts.envelope,
        InitialGuess::default(),
        norm,
        (opts.exclude_before, opts.oscillation_until.unwrap_or(f64::INFINITY)),
    ) {
        Ok(f) => Some(f),
        Err(Error::NoOscillation) => None,
        Err(e) => return Err(Error::Fit(format!("s_DA/s_RL: {e}"))),
    };
    let quadrature_error = oscillation.as_ref().map(|o| {
        let diff = wrap_phase(o.components[1].phase - o.components[0].phase);
        (diff - PI / 2.0).abs().min((diff + PI / 2.0).abs())
    });
    Ok(FitResult {
        omega_l: oscillation.as_ref().map(|o| o.omega),
        t1: relaxation.t1,
        t2_star: oscillation.as_ref().map(|o| o.t2),
        relaxation,
        oscillation,
        quadrature_error,
        options: *opts,
    })
}

/// C_S from the fitted, offset-free DA and RL parts at `at_tau`.
pub fn measure_stokes_coherence(fit: &FitResult, at_tau: f64) -> f64 {
    match &fit.oscillation {
        Some(o) => o.oscillation(0, at_tau).hypot(o.oscillation(1, at_tau)),
        None => 0.0,
    }
}

/// Oscillation period from the zero crossings of `y` inside `window`: crossing times
/// (linearly interpolated) are regressed on their index, and the slope is half a period.
pub fn zero_crossing_period(tau: &[f64], y: &[f64], window: (f64, f64)) -> Result<f64> {
    let (t, v) = select(tau, y, window)?;
    let crossings: Vec<f64> = t
        .windows(2)
        .zip(v.windows(2))
        .filter_map(|(tw, vw)| {
            let (a, b) = (vw[0], vw[1]);
            (a != b && (a <= 0.0) != (b <= 0.0)).then(|| tw[0] + (tw[1] - tw[0]) * a / (a - b))
        })
        .collect();
    if crossings.len() < 3 {
        return Err(Error::NoOscillation);
    }
    let n = crossings.len() as f64;
    let mk = (n - 1.0) / 2.0;
    let mt = crossings.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, c) in crossings.iter().enumerate() {
        sxy += (k as f64 - mk) * (c - mt);
        sxx += (k as f64 - mk).powi(2);
    }
    Ok(2.0 * sxy / sxx)
}
