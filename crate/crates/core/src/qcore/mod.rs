//! Open-system kernel: density operators, Lindblad superoperators, propagation and
//! quantum-regression correlations.

pub mod correlation;
pub mod density;
pub mod expm;
pub mod liouvillian;
pub mod ops;
pub mod propagate;

pub use correlation::{regression, two_time_correlation, CorrelationTrace};
pub use density::{DensityOperator, Subsystem};
pub use liouvillian::{build_lindblad, steady_state, JumpOperator, Liouvillian};
pub use ops::{CMat, C64};
pub use propagate::{propagate, propagate_with, Method};
