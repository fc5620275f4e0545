//! Command-line front end. `run` parses arguments, loads the configuration, dispatches one
//! subcommand and maps the outcome to an exit code:
//! 0 success, 2 configuration or input error, 3 numerical failure, 4 validation failure.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Mode, RunConfig};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "spinphoton", version, about = "Spin-photon back-action simulation and Stokes tomography")]
pub struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, global = true)]
    pub mode: Option<Mode>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unconditional V→V and V→H reflectivities against laser detuning.
    ReflectivityScan,
    /// g2 between the φ-polarized first photon and H, V, D, A, R, L.
    Correlations,
    /// Conditional Stokes traces and the spin Bloch vector.
    Stokes,
    /// C_B and C_S against the measurement angle.
    CoherenceSweep,
    /// Extract ω_L, T2* and T1 from a Stokes trace CSV.
    Fit {
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the acceptance criteria.
    Validate {
        /// Print the criteria without running them.
        #[arg(long)]
        list: bool,
        /// Comma-separated subset of criterion ids.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Input(_) | Error::Io(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    Ok(cfg)
}

/// Entry point of the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Command::Validate { list: true, .. } = cli.command {
        print!("{}", validate::listing());
        return EXIT_OK;
    }
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let written = match &cli.command {
        Command::ReflectivityScan => commands::reflectivity_scan(&cfg),
        Command::Correlations => commands::correlations(&cfg),
        Command::Stokes => commands::stokes(&cfg),
        Command::CoherenceSweep => commands::coherence_sweep(&cfg),
        Command::Fit { trace } => commands::fit(&cfg, trace.as_deref()),
        Command::Validate { only, .. } => return run_validation(&cfg, only),
    };
    match written {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_validation(cfg: &RunConfig, only: &[u8]) -> i32 {
    let ids = if only.is_empty() { validate::all_ids() } else { only.to_vec() };
    let suite = match validate::Suite::new(cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let outcomes = suite.run_all(&ids, |o| println!("{o}"));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}
