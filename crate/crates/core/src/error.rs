use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("non-Hermitian Hamiltonian: max |H - H^dagger| = {0:.3e}")]
    NonHermitian(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("steady state is not unique: {0}")]
    DegenerateSteadyState(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("integration did not converge: {0}")]
    Convergence(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state is not stationary: residual {0:.3e}")]
    NotStationary(f64),

    #[error("Fock cutoff too small: population {0:.3e} at the highest photon number")]
    CutoffViolation(f64),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("no oscillation detected in the trace")]
    NoOscillation,

    #[error("config error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
