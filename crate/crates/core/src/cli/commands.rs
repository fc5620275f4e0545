//! One function per subcommand. Each writes its CSVs into the configured output directory
//! and returns the paths it wrote.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{Mode, ReflectivitySource, RunConfig};
use super::output::{read_stokes_csv, write_csv, Provenance, STOKES_COLUMNS};
use crate::backaction::{self, ReflectionSet, SpinDynamicsParams};
use crate::device::{ghz, Polarization};
use crate::error::{Error, Result};
use crate::lindblad::{
    basis_polarization, click_condition_many, operating_point, reflection_set_from, BasisTraces, SimulationConfig,
    BASES,
};
use crate::tomography::{extract_all, measure_stokes_coherence, FitOptions, FitResult};
use crate::traces::{BlochTrace, StokesTrace};

/// Inputs of the closed-form engine: amplitudes, spin populations and free dynamics.
#[derive(Debug, Clone)]
pub struct AnalyticInputs {
    pub reflections: ReflectionSet,
    pub p_up: f64,
    pub dynamics: SpinDynamicsParams,
}

pub fn analytic_inputs(cfg: &RunConfig) -> Result<AnalyticInputs> {
    let sim = cfg.simulation_config()?;
    let (reflections, p_up) = match cfg.analytical.source {
        ReflectivitySource::Fixed => (cfg.analytical.fixed_set()?, cfg.analytical.p_up),
        ReflectivitySource::Numerical => {
            let op = operating_point(&sim)?;
            (reflection_set_from(&sim, &op)?, op.spin_populations().0)
        }
    };
    let mut dynamics = SpinDynamicsParams::from_device(&sim.params, p_up)?;
    dynamics.envelope = cfg.analytical.envelope.into();
    Ok(AnalyticInputs { reflections, p_up, dynamics })
}

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance::new(cfg.hash(), cfg.seed)
}

pub fn reflectivity_scan(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if cfg.mode == Mode::Analytical {
        return Err(Error::Config("reflectivity-scan has no closed-form counterpart; use --mode lindblad".into()));
    }
    let sim = cfg.simulation_config()?;
    let det_ghz = cfg.detunings_ghz();
    let det: Vec<f64> = det_ghz.iter().copied().map(ghz).collect();
    let points = crate::lindblad::unconditional_reflectivities(&sim, &det)?;
    let rows: Vec<Vec<f64>> = det_ghz.iter().zip(&points).map(|(d, p)| vec![*d, p.p_vv, p.p_vh, p.p_cav]).collect();
    let path = write_csv(
        &cfg.output_dir,
        "reflectivity_scan.csv",
        &provenance(cfg),
        &["detuning_GHz", "P_VtoV", "P_VtoH", "P_cav"],
        &rows,
    )?;
    Ok(vec![path])
}

/// Six correlation traces over negative and positive delays, second photon in H, V, D, A, R, L.
pub fn correlation_traces(cfg: &RunConfig) -> Result<Vec<(&'static str, Vec<f64>, Vec<f64>)>> {
    let sim = cfg.simulation_config()?;
    let first = Polarization::linear(cfg.phi());
    match cfg.mode {
        Mode::Lindblad => {
            let bt = BasisTraces::compute_default(&sim)?;
            Ok(bt.correlation_set(first)?.into_iter().map(|(b, t)| (b, t.tau, t.values)).collect())
        }
        Mode::Analytical => {
            let a = analytic_inputs(cfg)?;
            let grid = sim.tau_grid.points()?;
            BASES
                .iter()
                .map(|&b| {
                    let second = basis_polarization(b).expect("known basis");
                    let pos = backaction::g2_trace_pol(first, second, &a.reflections, &a.dynamics, &grid)?;
                    let neg = backaction::g2_trace_pol(second, first, &a.reflections, &a.dynamics, &grid)?;
                    let mut tau: Vec<f64> = grid[1..].iter().rev().map(|t| -t).collect();
                    let mut vals: Vec<f64> = neg[1..].iter().rev().copied().collect();
                    tau.extend_from_slice(&grid);
                    vals.extend_from_slice(&pos);
                    Ok((b, tau, vals))
                })
                .collect()
        }
    }
}

pub fn correlations(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prov = provenance(cfg);
    correlation_traces(cfg)?
        .into_iter()
        .map(|(b, tau, g2)| {
            let rows: Vec<Vec<f64>> = tau.iter().zip(&g2).map(|(t, g)| vec![t * 1e9, *g]).collect();
            write_csv(&cfg.output_dir, &format!("g2_{b}.csv"), &prov, &["tau_ns", "g2"], &rows)
        })
        .collect()
}

pub fn stokes_traces(cfg: &RunConfig) -> Result<(StokesTrace, BlochTrace)> {
    let sim = cfg.simulation_config()?;
    let phi = cfg.phi();
    match cfg.mode {
        Mode::Lindblad => {
            let bt = BasisTraces::compute_default(&sim)?;
            let first = Polarization::linear(phi);
            Ok((bt.stokes(first)?, bt.bloch(first)?))
        }
        Mode::Analytical => {
            let a = analytic_inputs(cfg)?;
            let grid = sim.tau_grid.points()?;
            Ok((
                backaction::stokes_trace(phi, &a.reflections, &a.dynamics, &grid)?,
                backaction::bloch_trace(phi, &a.reflections, &a.dynamics, &grid)?,
            ))
        }
    }
}

pub fn stokes(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prov = provenance(cfg);
    let (st, bl) = stokes_traces(cfg)?;
    let rows: Vec<Vec<f64>> =
        (0..st.len()).map(|k| vec![st.tau[k] * 1e9, st.s_hv[k], st.s_da[k], st.s_rl[k]]).collect();
    let mut out = vec![write_csv(&cfg.output_dir, "stokes.csv", &prov, &STOKES_COLUMNS, &rows)?];
    if cfg.experiment.write_bloch {
        let rows: Vec<Vec<f64>> = (0..bl.tau.len()).map(|k| vec![bl.tau[k] * 1e9, bl.x[k], bl.y[k], bl.z[k]]).collect();
        out.push(write_csv(&cfg.output_dir, "bloch.csv", &prov, &["tau_ns", "sigma_x", "sigma_y", "sigma_z"], &rows)?);
    }
    Ok(out)
}

/// C_S of a simulated trace from extrapolated fitted amplitudes; a trace without oscillation gives 0.
pub fn fitted_stokes_coherence(st: &StokesTrace, opts: &FitOptions) -> Result<f64> {
    match extract_all(st, opts) {
        Ok(fit) => Ok(measure_stokes_coherence(&fit, opts.at_tau)),
        Err(Error::NoOscillation) => Ok(0.0),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub phi: f64,
    pub c_b: f64,
    pub c_s_analytical: f64,
    pub c_s_numerical: f64,
}

/// Both engines over the configured sweep. C_B comes from the engine selected by `mode`;
/// both C_S columns are always computed.
pub fn coherence_rows(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let sim = cfg.simulation_config()?;
    let opts = cfg.fit.options()?;
    let phis = cfg.sweep();
    let a = analytic_inputs(cfg)?;
    let analytic =
        backaction::coherence_sweep(&phis, a.p_up, 1.0 - a.p_up, &a.reflections, opts.at_tau, &a.dynamics)?;
    let bt = BasisTraces::compute_default(&sim)?;
    let c_b: Vec<f64> = match cfg.mode {
        Mode::Analytical => analytic.iter().map(|p| p.c_b).collect(),
        Mode::Lindblad => numerical_bloch_coherence(&sim, &phis)?,
    };
    phis.iter()
        .enumerate()
        .map(|(k, &phi)| {
            let st = bt.stokes(Polarization::linear(phi))?;
            Ok(SweepRow {
                phi,
                c_b: c_b[k],
                c_s_analytical: analytic[k].c_s,
                c_s_numerical: fitted_stokes_coherence(&st, &opts)?,
            })
        })
        .collect()
}

pub fn numerical_bloch_coherence(sim: &SimulationConfig, phis: &[f64]) -> Result<Vec<f64>> {
    let pols: Vec<Polarization> = phis.iter().map(|&p| Polarization::linear(p)).collect();
    Ok(click_condition_many(sim, &pols)?.iter().map(|c| c.reduced_spin.bloch_coherence()).collect())
}

pub fn coherence_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let rows: Vec<Vec<f64>> = coherence_rows(cfg)?
        .iter()
        .map(|r| vec![r.phi.to_degrees(), r.c_b, r.c_s_analytical, r.c_s_numerical])
        .collect();
    let path = write_csv(
        &cfg.output_dir,
        "coherence_sweep.csv",
        &provenance(cfg),
        &["phi_deg", "C_B", "C_S_analytical", "C_S_numerical"],
        &rows,
    )?;
    Ok(vec![path])
}

/// `key = value` report of a fit, valid TOML.
pub fn render_fit(fit: &FitResult, prov: &Provenance) -> String {
    let mut s = prov.comment_line();
    s.push('\n');
    let o = &fit.options;
    let _ = writeln!(s, "envelope = \"{:?}\"", o.envelope);
    let _ = writeln!(s, "exclude_before_ns = {}", o.exclude_before * 1e9);
    let _ = writeln!(s, "relaxation_model = \"{:?}\"", fit.relaxation.model);
    let _ = writeln!(s, "t1_ns = {}", fit.relaxation.t1 * 1e9);
    let _ = writeln!(s, "t1_err_ns = {}", fit.relaxation.t1_err * 1e9);
    let _ = writeln!(s, "hv_offset = {}", fit.relaxation.offset);
    let _ = writeln!(s, "hv_amplitude = {}", fit.relaxation.amplitude);
    let _ = writeln!(s, "hv_denominator_d = {}", fit.relaxation.d);
    match &fit.oscillation {
        None => {
            let _ = writeln!(s, "oscillation = \"absent\"");
        }
        Some(osc) => {
            let _ = writeln!(s, "oscillation = \"present\"");
            let _ = writeln!(s, "larmor_period_ns = {}", 2.0 * std::f64::consts::PI / osc.omega * 1e9);
            let _ = writeln!(s, "omega_l_rad_per_ns = {}", osc.omega * 1e-9);
            let _ = writeln!(s, "omega_l_err_rad_per_ns = {}", osc.omega_err * 1e-9);
            let _ = writeln!(s, "t2_star_ns = {}", osc.t2 * 1e9);
            let _ = writeln!(s, "t2_star_err_ns = {}", osc.t2_err * 1e9);
            for (name, c) in ["da", "rl"].iter().zip(&osc.components) {
                let _ = writeln!(s, "{name}_amplitude = {}", c.amplitude);
                let _ = writeln!(s, "{name}_amplitude_err = {}", c.amplitude_err);
                let _ = writeln!(s, "{name}_phase_rad = {}", c.phase);
                let _ = writeln!(s, "{name}_offset = {}", c.offset);
            }
            if let Some(q) = fit.quadrature_error {
                let _ = writeln!(s, "quadrature_error_rad = {q}");
            }
            let _ = writeln!(s, "stokes_coherence = {}", measure_stokes_coherence(fit, o.at_tau));
        }
    }
    s
}

pub fn fit(cfg: &RunConfig, trace: Option<&Path>) -> Result<Vec<PathBuf>> {
    let path = trace
        .map(Path::to_path_buf)
        .or_else(|| cfg.fit.trace.clone())
        .ok_or_else(|| Error::Config("fit needs a trace: pass --trace or set [fit] trace".into()))?;
    let st = read_stokes_csv(&path)?;
    let result = extract_all(&st, &cfg.fit.options()?)?;
    let prov = provenance(cfg);
    std::fs::create_dir_all(&cfg.output_dir)?;
    let report = cfg.output_dir.join("fit_result.txt");
    std::fs::write(&report, render_fit(&result, &prov))?;
    let [hv, da, rl] = result.residuals(&st);
    let rows: Vec<Vec<f64>> = (0..st.len()).map(|k| vec![st.tau[k] * 1e9, hv[k], da[k], rl[k]]).collect();
    let res = write_csv(&cfg.output_dir, "fit_residuals.csv", &prov, &["tau_ns", "r_HV", "r_DA", "r_RL"], &rows)?;
    Ok(vec![report, res])
}
