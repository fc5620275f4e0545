//! Simulation of measurement back-action from a charged quantum dot in a polarization-split
//! micropillar cavity: closed-form model, full master-equation model, and Stokes tomography.

pub mod backaction;
pub mod cli;
pub mod device;
pub mod error;
pub mod lindblad;
pub mod qcore;
pub mod tomography;
pub mod traces;

pub use error::{Error, Result};
