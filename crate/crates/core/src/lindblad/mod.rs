//! Full master-equation model: four-level dot ⊗ two polarized cavity modes in the frame of
//! the drive laser, with Overhauser averaging and charge-occupation blending.

mod dynamics;
mod lifetime;
mod model;
mod overhauser;
mod steady;

pub use dynamics::{
    basis_polarization, bloch_trace_sim, conditional_stokes_sim, g2_correlation, g2_symmetric, BasisTraces,
    CorrelationSet, BASES,
};
pub use lifetime::radiative_lifetime;
pub use model::{build_model, build_system, Model, QD_DIM};
pub use overhauser::{gauss_hermite, overhauser_average, overhauser_nodes, Weighted};
pub use steady::{
    click_condition, click_condition_many, click_condition_pol, extract_reflection_set, reflection_set_from, operating_point, unconditional_reflectivities, ClickConditionedState,
    OperatingPoint, ReflectivityPoint,
};

use crate::device::{dressed_omega_1, level_structure, DeviceParams};
use crate::error::{Error, Result};

/// How the off-mode emission rate is split over the four optical transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaSpMode {
    /// Each transition decays at γ_sp.
    #[default]
    PerTransition,
    /// The trion decays at γ_sp in total, γ_sp/2 through each of its two transitions.
    Total,
}

/// Which steady state normalizes g².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum G2Normalization {
    /// Charged and empty dot mixed with weight P_c in numerator and denominator.
    #[default]
    ChargeBlended,
    /// Charged dot only.
    ChargedOnly,
}

/// Delay grid 0, step, ..., max (seconds). Correlations mirror it to negative delays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGrid {
    pub max: f64,
    pub step: f64,
}

impl Default for TauGrid {
    fn default() -> Self {
        Self { max: 20e-9, step: 0.05e-9 }
    }
}

impl TauGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        crate::traces::uniform_grid(0.0, self.max, self.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub params: DeviceParams,
    pub fock_cutoff: usize,
    /// Laser detuning from ω₁ (rad/s). `None` tunes to ω₁ shifted by its V-mode Lamb shift.
    pub laser_detuning: Option<f64>,
    pub overhauser_nodes: usize,
    pub gamma_sp_mode: GammaSpMode,
    pub g2_normalization: G2Normalization,
    pub tau_grid: TauGrid,
    pub rng_seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            params: DeviceParams::default(),
            fock_cutoff: 2,
            laser_detuning: None,
            overhauser_nodes: 9,
            gamma_sp_mode: GammaSpMode::PerTransition,
            g2_normalization: G2Normalization::ChargeBlended,
            tau_grid: TauGrid::default(),
            rng_seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.fock_cutoff < 1 {
            return Err(Error::InvalidParameter("fock_cutoff must be >= 1".into()));
        }
        if self.overhauser_nodes == 0 || self.overhauser_nodes % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "overhauser_nodes must be odd and >= 1, got {}",
                self.overhauser_nodes
            )));
        }
        if let Some(d) = self.laser_detuning {
            if !d.is_finite() {
                return Err(Error::InvalidParameter("laser detuning must be finite".into()));
            }
        }
        if !(self.tau_grid.step > 0.0) || !(self.tau_grid.max > 0.0) {
            return Err(Error::InvalidParameter("delay grid needs positive max and step".into()));
        }
        Ok(())
    }

    /// Absolute laser angular frequency (relative to the cavity centre).
    pub fn omega_laser(&self) -> f64 {
        match self.laser_detuning {
            Some(d) => level_structure(&self.params).omega[0] + d,
            None => dressed_omega_1(&self.params),
        }
    }

    /// The idealized setting used for comparison with the closed-form model:
    /// no trion dephasing and no Overhauser spread.
    pub fn idealized(&self) -> Self {
        let mut c = self.clone();
        c.params.gamma_star = 0.0;
        c.overhauser_nodes = 1;
        c
    }
}
