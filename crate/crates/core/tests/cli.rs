//! End-to-end runs of the `spinphoton` binary on small configurations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spinphoton::cli::output::read_stokes_csv;
use spinphoton::device::{level_structure, DeviceParams};
use spinphoton::tomography::zero_crossing_period;

const SMALL: &str = r#"
[simulation]
overhauser_nodes = 1
tau_max_ns = 8.0
tau_step_ns = 0.1

[experiment]
sweep_step_deg = 15.0
detuning_start_ghz = -4.0
detuning_stop_ghz = 4.0
detuning_step_ghz = 0.5
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_spinphoton"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Data rows of a CSV written by the tool, skipping the provenance comment and header.
fn table(path: PathBuf) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k]).collect()
}

fn with(extra: &str) -> String {
    format!("{extra}\n{SMALL}")
}

#[test]
fn reflectivity_scan_shape_and_uncharged_limit() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), SMALL, &["reflectivity-scan"]));
    let (h, rows) = table(dir.path().join("out/reflectivity_scan.csv"));
    assert_eq!(h, ["detuning_GHz", "P_VtoV", "P_VtoH", "P_cav"]);
    let det = column(&h, &rows, "detuning_GHz");
    let (vv, vh, cav) = (column(&h, &rows, "P_VtoV"), column(&h, &rows, "P_VtoH"), column(&h, &rows, "P_cav"));
    let p = DeviceParams::default();
    let w1 = (level_structure(&p).omega[0] - p.delta_qd) / (2.0 * std::f64::consts::PI * 1e9);
    let peak = (0..det.len()).max_by(|&a, &b| vh[a].total_cmp(&vh[b])).unwrap();
    assert!((det[peak] - w1).abs() <= 1.0, "P_VtoH peaks at {} GHz, transition at {w1}", det[peak]);
    let dip = (1..det.len() - 1)
        .filter(|&k| (det[k] - w1).abs() <= 1.0 && vv[k] < vv[k - 1] && vv[k] < vv[k + 1])
        .min_by(|&a, &b| vv[a].total_cmp(&vv[b]));
    let dip = dip.expect("no P_VtoV dip near the first transition");
    assert!(vv[dip] < cav[dip] - 0.1, "dip {} vs cavity {}", vv[dip], cav[dip]);
    assert!(vh[0] < vh[peak] / 2.0 && vh[det.len() - 1] < vh[peak] / 2.0);

    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), &with("[device]\np_charge = 0.0"), &["reflectivity-scan"]));
    let (h, rows) = table(dir.path().join("out/reflectivity_scan.csv"));
    assert!(column(&h, &rows, "P_VtoH").iter().all(|v| v.abs() < 1e-6));
}

#[test]
fn reruns_are_byte_identical() {
    for (mode, cmd, file) in [
        ("lindblad", "reflectivity-scan", "reflectivity_scan.csv"),
        ("analytical", "correlations", "g2_V.csv"),
        ("analytical", "stokes", "stokes.csv"),
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        ok(&run(a.path(), SMALL, &["--mode", mode, cmd]));
        ok(&run(b.path(), SMALL, &["--mode", mode, cmd]));
        let (x, y) = (fs::read(a.path().join("out").join(file)).unwrap(), fs::read(b.path().join("out").join(file)).unwrap());
        assert!(x == y, "{file} differs between runs");
        let text = String::from_utf8(x).unwrap();
        assert!(text.starts_with("# spinphoton ") && text.lines().next().unwrap().contains("config_hash="));
    }
}

#[test]
fn correlation_signatures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with("").replace("tau_max_ns = 8.0", "tau_max_ns = 20.0").replace("tau_step_ns = 0.1", "tau_step_ns = 0.25");
    ok(&run(dir.path(), &cfg, &["correlations"]));
    for b in ["H", "V", "D", "A", "R", "L"] {
        let (h, rows) = table(dir.path().join(format!("out/g2_{b}.csv")));
        assert_eq!(h, ["tau_ns", "g2"]);
        let (tau, g2) = (column(&h, &rows, "tau_ns"), column(&h, &rows, "g2"));
        assert!(tau[0] < 0.0 && *tau.last().unwrap() > 0.0);
        for k in [0, tau.len() - 1] {
            assert!((g2[k] - 1.0).abs() < 0.02, "g2_{b}({}) = {}", tau[k], g2[k]);
        }
        let after = tau.iter().position(|&t| t > 0.0).unwrap();
        match b {
            "H" => assert!(g2[after..].iter().cloned().fold(f64::INFINITY, f64::min) < 1.0),
            "V" => assert!(g2[after] > 1.0),
            _ => {}
        }
    }
}

#[test]
fn stokes_traces_in_both_engines() {
    let analytical = tempfile::tempdir().unwrap();
    ok(&run(analytical.path(), SMALL, &["--mode", "analytical", "stokes"]));
    let a = read_stokes_csv(&analytical.path().join("out/stokes.csv")).unwrap();
    let ta = zero_crossing_period(&a.tau, &a.s_da, (1e-9, 6e-9)).unwrap();
    let tl = level_structure(&DeviceParams::default()).larmor_period();
    assert!((ta / tl - 1.0).abs() < 0.03, "analytical period {ta}");

    let numerical = tempfile::tempdir().unwrap();
    ok(&run(numerical.path(), SMALL, &["stokes"]));
    let n = read_stokes_csv(&numerical.path().join("out/stokes.csv")).unwrap();
    let tn = zero_crossing_period(&n.tau, &n.s_da, (1e-9, 6e-9)).unwrap();
    assert!((tn / ta - 1.0).abs() < 0.02, "lindblad {tn} vs analytical {ta}");
    let (h, rows) = table(numerical.path().join("out/bloch.csv"));
    assert_eq!(h, ["tau_ns", "sigma_x", "sigma_y", "sigma_z"]);
    assert_eq!(rows.len(), n.len());

    for mode in ["analytical", "lindblad"] {
        let dir = tempfile::tempdir().unwrap();
        ok(&run(dir.path(), &SMALL.replace("[experiment]\n", "[experiment]\nphi_deg = 0.0\n"), &["--mode", mode, "stokes"]));
        let s = read_stokes_csv(&dir.path().join("out/stokes.csv")).unwrap();
        assert!(s.s_da.iter().chain(&s.s_rl).all(|v| v.abs() < 1e-9), "{mode}: coherent columns at phi = 0");
    }
}

#[test]
fn coherence_sweep_columns() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), SMALL, &["coherence-sweep"]));
    let (h, rows) = table(dir.path().join("out/coherence_sweep.csv"));
    assert_eq!(h, ["phi_deg", "C_B", "C_S_analytical", "C_S_numerical"]);
    let phi = column(&h, &rows, "phi_deg");
    let (cb, ca, cn) = (column(&h, &rows, "C_B"), column(&h, &rows, "C_S_analytical"), column(&h, &rows, "C_S_numerical"));
    let last = phi.len() - 1;
    assert_eq!((phi[0], phi[last]), (0.0, 180.0));
    for k in [0, last] {
        assert!(ca[k].abs() < 1e-9);
        assert!(cb[k].abs() < 1e-3 && cn[k].abs() < 1e-3);
    }
    let best = (0..phi.len()).max_by(|&a, &b| cn[a].total_cmp(&cn[b])).unwrap();
    assert!((20.0..=45.0).contains(&phi[best]), "numerical C_S peaks at {}", phi[best]);
    for k in 0..phi.len() {
        assert!(ca[k] + 1e-9 >= cn[k], "phi {}: analytical {} < numerical {}", phi[k], ca[k], cn[k]);
    }
}

#[test]
fn fit_pipeline_recovers_timescales() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with("").replace("tau_max_ns = 8.0", "tau_max_ns = 20.0").replace("tau_step_ns = 0.1", "tau_step_ns = 0.05");
    ok(&run(dir.path(), &cfg, &["--mode", "analytical", "stokes"]));
    ok(&run(dir.path(), &cfg, &["fit", "--trace", dir.path().join("out/stokes.csv").to_str().unwrap()]));
    let text = fs::read_to_string(dir.path().join("out/fit_result.txt")).unwrap();
    let v: toml::Table = text.parse().unwrap();
    let num = |k: &str| v[k].as_float().unwrap();
    assert_eq!(v["oscillation"].as_str(), Some("present"));
    let tl = level_structure(&DeviceParams::default()).larmor_period() * 1e9;
    assert!((num("larmor_period_ns") / tl - 1.0).abs() < 1e-6);
    assert!((num("t2_star_ns") / (2f64.sqrt() / (2.0 * std::f64::consts::PI * 0.120)) - 1.0).abs() < 1e-6);
    assert!((num("t1_ns") / 4.1 - 1.0).abs() < 1e-6);
    let (h, rows) = table(dir.path().join("out/fit_residuals.csv"));
    assert_eq!(h, ["tau_ns", "r_HV", "r_DA", "r_RL"]);
    assert!(rows.iter().all(|r| r[1..].iter().all(|x| x.abs() < 1e-6)));
}

#[test]
fn classical_trace_fits_without_oscillation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("[experiment]\n", "[experiment]\nphi_deg = 0.0\n");
    ok(&run(dir.path(), &cfg, &["--mode", "analytical", "stokes"]));
    ok(&run(dir.path(), &cfg, &["fit", "--trace", dir.path().join("out/stokes.csv").to_str().unwrap()]));
    let v: toml::Table = fs::read_to_string(dir.path().join("out/fit_result.txt")).unwrap().parse().unwrap();
    assert_eq!(v["oscillation"].as_str(), Some("absent"));
    assert!((v["t1_ns"].as_float().unwrap() / 4.1 - 1.0).abs() < 1e-6);
}

#[test]
fn malformed_trace_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "tau_ns,s_HV,s_DA,s_RL\n0.0,0.1,0.2\n").unwrap();
    let out = run(dir.path(), SMALL, &["fit", "--trace", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    fs::write(&bad, "tau_ns,s_HV,s_DA,s_RL\n0.0,0.1,zero,0.3\n").unwrap();
    let out = run(dir.path(), SMALL, &["fit", "--trace", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "[device]\nkappa_h_ghz = 44.5\nno_such_key = 1\n", &["stokes"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no_such_key") && err.contains("line 3"), "{err}");

    let out = run(dir.path(), "[device]\np_charge = 1.5\n", &["stokes"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), SMALL, &["--mode", "analytical", "reflectivity-scan"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), SMALL, &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_lists_criteria() {
    let out = Command::new(env!("CARGO_BIN_EXE_spinphoton")).args(["validate", "--list"]).output().unwrap();
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    for id in 1..=9 {
        assert!(text.lines().any(|l| l.trim_start().starts_with(&format!("{id}"))), "criterion {id} missing:\n{text}");
    }
}

#[test]
fn stronger_coupling_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "[device]\ng_ghz = 9.3\n", &["validate", "--only", "7,8"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
