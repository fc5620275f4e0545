//! Run configuration. File units: frequencies in GHz (ordinary, not angular), times in ns,
//! field in mT, angles in degrees. Everything is converted to SI/rad·s⁻¹ at load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backaction::{Envelope, ReflectionSet};
use crate::device::{ghz, to_ghz, DeviceParams};
use crate::error::{Error, Result};
use crate::lindblad::{G2Normalization, GammaSpMode, SimulationConfig, TauGrid};
use crate::tomography::{FitOptions, RelaxationModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytical,
    #[default]
    Lindblad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    pub kappa_h_ghz: f64,
    pub kappa_v_ghz: f64,
    pub eta_top_h: f64,
    pub eta_top_v: f64,
    pub delta_c_ghz: f64,
    pub delta_qd_ghz: f64,
    pub g_ghz: f64,
    pub gamma_sp_ghz: f64,
    pub gamma_star_ghz: f64,
    pub g_e_perp: f64,
    pub g_h_perp: f64,
    pub b_field_mt: f64,
    pub gamma_e_ghz: f64,
    pub tau_esc_ns: f64,
    pub p_charge: f64,
    /// Incident photons per ns.
    pub photon_flux_per_ns: f64,
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self {
            kappa_h_ghz: 44.5,
            kappa_v_ghz: 45.0,
            eta_top_h: 0.65,
            eta_top_v: 0.63,
            delta_c_ghz: 36.4,
            delta_qd_ghz: -51.2,
            g_ghz: 3.1,
            gamma_sp_ghz: 0.157,
            gamma_star_ghz: 0.024,
            g_e_perp: 0.48,
            g_h_perp: 0.10,
            b_field_mt: 200.0,
            gamma_e_ghz: 0.120,
            tau_esc_ns: 4.1,
            p_charge: 0.96,
            photon_flux_per_ns: 0.016,
        }
    }
}

impl DeviceSection {
    pub fn to_params(&self) -> Result<DeviceParams> {
        let p = DeviceParams {
            kappa_h: ghz(self.kappa_h_ghz),
            kappa_v: ghz(self.kappa_v_ghz),
            eta_top_h: self.eta_top_h,
            eta_top_v: self.eta_top_v,
            delta_c: ghz(self.delta_c_ghz),
            delta_qd: ghz(self.delta_qd_ghz),
            g: ghz(self.g_ghz),
            gamma_sp: ghz(self.gamma_sp_ghz),
            gamma_star: ghz(self.gamma_star_ghz),
            g_e_perp: self.g_e_perp,
            g_h_perp: self.g_h_perp,
            b_field: self.b_field_mt * 1e-3,
            gamma_e: ghz(self.gamma_e_ghz),
            tau_esc: self.tau_esc_ns * 1e-9,
            p_charge: self.p_charge,
            drive_photon_rate: self.photon_flux_per_ns * 1e9,
        };
        p.validate().map_err(|e| Error::Config(format!("[device] {e}")))?;
        Ok(p)
    }

    pub fn from_params(p: &DeviceParams) -> Self {
        Self {
            kappa_h_ghz: to_ghz(p.kappa_h),
            kappa_v_ghz: to_ghz(p.kappa_v),
            eta_top_h: p.eta_top_h,
            eta_top_v: p.eta_top_v,
            delta_c_ghz: to_ghz(p.delta_c),
            delta_qd_ghz: to_ghz(p.delta_qd),
            g_ghz: to_ghz(p.g),
            gamma_sp_ghz: to_ghz(p.gamma_sp),
            gamma_star_ghz: to_ghz(p.gamma_star),
            g_e_perp: p.g_e_perp,
            g_h_perp: p.g_h_perp,
            b_field_mt: p.b_field * 1e3,
            gamma_e_ghz: to_ghz(p.gamma_e),
            tau_esc_ns: p.tau_esc * 1e9,
            p_charge: p.p_charge,
            photon_flux_per_ns: p.drive_photon_rate * 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSpModeKey {
    #[default]
    PerTransition,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKey {
    #[default]
    ChargeBlended,
    ChargedOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub fock_cutoff: usize,
    /// Laser detuning from ω₁ in GHz; absent means ω₁ with its V-mode Lamb shift.
    pub laser_detuning_ghz: Option<f64>,
    pub overhauser_nodes: usize,
    pub gamma_sp_mode: GammaSpModeKey,
    pub g2_normalization: NormalizationKey,
    pub tau_max_ns: f64,
    pub tau_step_ns: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            fock_cutoff: 2,
            laser_detuning_ghz: None,
            overhauser_nodes: 9,
            gamma_sp_mode: GammaSpModeKey::PerTransition,
            g2_normalization: NormalizationKey::ChargeBlended,
            tau_max_ns: 20.0,
            tau_step_ns: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// First-photon polarization angle φ for correlations and Stokes traces.
    pub phi_deg: f64,
    pub sweep_start_deg: f64,
    pub sweep_stop_deg: f64,
    pub sweep_step_deg: f64,
    /// Laser detuning from the bare dot frequency.
    pub detuning_start_ghz: f64,
    pub detuning_stop_ghz: f64,
    pub detuning_step_ghz: f64,
    pub write_bloch: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            phi_deg: 30.0,
            sweep_start_deg: 0.0,
            sweep_stop_deg: 180.0,
            sweep_step_deg: 5.0,
            detuning_start_ghz: -10.0,
            detuning_stop_ghz: 10.0,
            detuning_step_ghz: 0.5,
            write_bloch: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKey {
    #[default]
    Gaussian,
    Exponential,
}

impl From<EnvelopeKey> for Envelope {
    fn from(k: EnvelopeKey) -> Self {
        match k {
            EnvelopeKey::Gaussian => Envelope::Gaussian,
            EnvelopeKey::Exponential => Envelope::Exponential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationKey {
    Exponential,
    #[default]
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub envelope: EnvelopeKey,
    pub exclude_before_ns: f64,
    /// Upper delay for the oscillation fit; `inf` disables the limit.
    pub oscillation_until_ns: f64,
    pub relaxation_model: RelaxationKey,
    pub at_tau_ns: f64,
    /// Stokes trace CSV used by `fit` when no path is given on the command line.
    pub trace: Option<PathBuf>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            envelope: EnvelopeKey::Gaussian,
            exclude_before_ns: 1.0,
            oscillation_until_ns: 6.0,
            relaxation_model: RelaxationKey::Ratio,
            at_tau_ns: 0.0,
            trace: None,
        }
    }
}

impl FitSection {
    pub fn options(&self) -> Result<FitOptions> {
        if !self.exclude_before_ns.is_finite() || !self.at_tau_ns.is_finite() || self.at_tau_ns < 0.0 {
            return Err(Error::Config("[fit] exclude_before_ns and at_tau_ns must be finite, at_tau_ns >= 0".into()));
        }
        if self.oscillation_until_ns.is_nan() || self.oscillation_until_ns <= self.exclude_before_ns {
            return Err(Error::Config("[fit] oscillation_until_ns must exceed exclude_before_ns".into()));
        }
        Ok(FitOptions {
            envelope: self.envelope.into(),
            exclude_before: self.exclude_before_ns * 1e-9,
            oscillation_until: self.oscillation_until_ns.is_finite().then_some(self.oscillation_until_ns * 1e-9),
            relaxation_model: match self.relaxation_model {
                RelaxationKey::Exponential => RelaxationModel::Exponential,
                RelaxationKey::Ratio => RelaxationModel::Ratio,
            },
            at_tau: self.at_tau_ns * 1e-9,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectivitySource {
    /// The values in this section.
    #[default]
    Fixed,
    /// Inferred from the master-equation steady state at the laser frequency.
    Numerical,
}

/// Inputs of the closed-form engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticalSection {
    pub source: ReflectivitySource,
    pub r_uu_sq: f64,
    pub r_dd_sq: f64,
    pub r_du_sq: f64,
    pub p_up: f64,
    pub envelope: EnvelopeKey,
}

impl Default for AnalyticalSection {
    fn default() -> Self {
        Self {
            source: ReflectivitySource::Fixed,
            r_uu_sq: 0.69,
            r_dd_sq: 0.37,
            r_du_sq: 0.06,
            p_up: 0.51,
            envelope: EnvelopeKey::Gaussian,
        }
    }
}

impl AnalyticalSection {
    pub fn fixed_set(&self) -> Result<ReflectionSet> {
        if !(0.0..=1.0).contains(&self.p_up) {
            return Err(Error::Config(format!("[analytical] p_up = {} outside [0, 1]", self.p_up)));
        }
        ReflectionSet::from_reflectivities(self.r_uu_sq, self.r_dd_sq, self.r_du_sq)
            .map_err(|e| Error::Config(format!("[analytical] {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub mode: Mode,
    pub device: DeviceSection,
    pub simulation: SimulationSection,
    pub experiment: ExperimentSection,
    pub fit: FitSection,
    pub analytical: AnalyticalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 0,
            mode: Mode::Lindblad,
            device: DeviceSection::default(),
            simulation: SimulationSection::default(),
            experiment: ExperimentSection::default(),
            fit: FitSection::default(),
            analytical: AnalyticalSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks every block so that schema errors surface before any computation.
    pub fn validate(&self) -> Result<()> {
        self.simulation_config()?;
        self.fit.options()?;
        self.analytical.fixed_set()?;
        let e = &self.experiment;
        let finite = [
            e.phi_deg,
            e.sweep_start_deg,
            e.sweep_stop_deg,
            e.sweep_step_deg,
            e.detuning_start_ghz,
            e.detuning_stop_ghz,
            e.detuning_step_ghz,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("[experiment] values must be finite".into()));
        }
        if !(0.0..=180.0).contains(&e.phi_deg) {
            return Err(Error::Config(format!("[experiment] phi_deg = {} outside [0, 180]", e.phi_deg)));
        }
        if e.sweep_start_deg < 0.0 || e.sweep_stop_deg > 180.0 || e.sweep_stop_deg < e.sweep_start_deg {
            return Err(Error::Config("[experiment] sweep must lie within [0, 180] degrees".into()));
        }
        if !(e.sweep_step_deg > 0.0) || !(e.detuning_step_ghz > 0.0) || e.detuning_stop_ghz < e.detuning_start_ghz {
            return Err(Error::Config("[experiment] grid steps must be positive and ranges ordered".into()));
        }
        Ok(())
    }

    pub fn simulation_config(&self) -> Result<SimulationConfig> {
        let s = &self.simulation;
        let cfg = SimulationConfig {
            params: self.device.to_params()?,
            fock_cutoff: s.fock_cutoff,
            laser_detuning: s.laser_detuning_ghz.map(ghz),
            overhauser_nodes: s.overhauser_nodes,
            gamma_sp_mode: match s.gamma_sp_mode {
                GammaSpModeKey::PerTransition => GammaSpMode::PerTransition,
                GammaSpModeKey::Total => GammaSpMode::Total,
            },
            g2_normalization: match s.g2_normalization {
                NormalizationKey::ChargeBlended => G2Normalization::ChargeBlended,
                NormalizationKey::ChargedOnly => G2Normalization::ChargedOnly,
            },
            tau_grid: TauGrid { max: s.tau_max_ns * 1e-9, step: s.tau_step_ns * 1e-9 },
            rng_seed: self.seed,
        };
        cfg.validate().map_err(|e| Error::Config(format!("[simulation] {e}")))?;
        Ok(cfg)
    }

    pub fn phi(&self) -> f64 {
        self.experiment.phi_deg.to_radians()
    }

    /// Sweep angles in radians, endpoints included.
    pub fn sweep(&self) -> Vec<f64> {
        let e = &self.experiment;
        inclusive_grid(e.sweep_start_deg, e.sweep_stop_deg, e.sweep_step_deg).into_iter().map(f64::to_radians).collect()
    }

    /// Detunings from the bare dot frequency, GHz.
    pub fn detunings_ghz(&self) -> Vec<f64> {
        let e = &self.experiment;
        inclusive_grid(e.detuning_start_ghz, e.detuning_stop_ghz, e.detuning_step_ghz)
    }

    /// Short SHA-256 over the canonical serialization, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = toml::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn inclusive_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_convert_to_device_defaults() {
        let p = RunConfig::default().device.to_params().unwrap();
        let d = DeviceParams::default();
        assert!((p.kappa_h - d.kappa_h).abs() < 1e-6 * d.kappa_h);
        assert!((p.b_field - d.b_field).abs() < 1e-15);
        assert!((p.tau_esc - d.tau_esc).abs() < 1e-21);
        assert!((p.drive_photon_rate - d.drive_photon_rate).abs() < 1e-6);
        let back = DeviceSection::from_params(&d);
        assert!((back.g_ghz - 3.1).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = RunConfig::from_toml("[device]\nkappa_x_ghz = 3.0\n").unwrap_err().to_string();
        assert!(err.contains("kappa_x_ghz"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn invalid_values_fail_before_running() {
        assert!(RunConfig::from_toml("[simulation]\noverhauser_nodes = 4\n").is_err());
        assert!(RunConfig::from_toml("[device]\np_charge = 1.5\n").is_err());
        assert!(RunConfig::from_toml("[experiment]\nphi_deg = 200.0\n").is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed = 7;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn grids_include_endpoints() {
        let c = RunConfig::default();
        let s = c.sweep();
        assert_eq!(s.len(), 37);
        assert!((s[36] - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(c.detunings_ghz().len(), 41);
    }
}
