//! Time series produced by the simulation engines and consumed by the fitter.

use crate::error::{Error, Result};
use crate::qcore::correlation::strictly_increasing_grid;

#[derive(Debug, Clone, PartialEq)]
pub struct StokesTrace {
    pub tau: Vec<f64>,
    pub s_hv: Vec<f64>,
    pub s_da: Vec<f64>,
    pub s_rl: Vec<f64>,
}

impl StokesTrace {
    pub fn new(tau: Vec<f64>, s_hv: Vec<f64>, s_da: Vec<f64>, s_rl: Vec<f64>) -> Result<Self> {
        strictly_increasing_grid(&tau)?;
        let n = tau.len();
        if s_hv.len() != n || s_da.len() != n || s_rl.len() != n {
            return Err(Error::Dimension("Stokes components differ in length from the delay grid".into()));
        }
        if s_hv.iter().chain(&s_da).chain(&s_rl).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite Stokes value".into()));
        }
        Ok(Self { tau, s_hv, s_da, s_rl })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn component(&self, c: StokesComponent) -> &[f64] {
        match c {
            StokesComponent::Hv => &self.s_hv,
            StokesComponent::Da => &self.s_da,
            StokesComponent::Rl => &self.s_rl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StokesComponent {
    Hv,
    Da,
    Rl,
}

impl std::fmt::Display for StokesComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StokesComponent::Hv => "s_HV",
            StokesComponent::Da => "s_DA",
            StokesComponent::Rl => "s_RL",
        })
    }
}

/// Pauli expectations of the reduced spin, x-quantized basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochTrace {
    pub tau: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl BlochTrace {
    pub fn new(tau: Vec<f64>, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        strictly_increasing_grid(&tau)?;
        let n = tau.len();
        if x.len() != n || y.len() != n || z.len() != n {
            return Err(Error::Dimension("Bloch components differ in length from the delay grid".into()));
        }
        Ok(Self { tau, x, y, z })
    }

    pub fn coherence(&self) -> Vec<f64> {
        self.y.iter().zip(&self.z).map(|(y, z)| y.hypot(*z)).collect()
    }
}

/// Uniform grid `start, start+step, ...` up to and including `stop` (within half a step).
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::InvalidParameter(format!("bad grid {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 0.5).floor() as usize + 1;
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}
