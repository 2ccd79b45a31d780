//! Pseudo-spectral solver and verification suite for the weakly coupled
//! damped wave system
//!
//! ```text
//! u_tt - Lap u + u_t = |v|^p,   v_tt - Lap v + v_t = |u_t|^q
//! ```
//!
//! on a periodic torus standing in for R^n (n = 1, 2), with data scaled by
//! eps. The crate provides the exact kernel multiplier and propagator, an
//! exponential predictor-corrector integrator plus a successive-approximation
//! mode, predicted decay-rate tables with slope regression, the test-function
//! functionals behind the subcritical nonexistence argument, exponent-plane
//! sweeps, and empirical checkers for the fractional inequalities the decay
//! analysis leans on.

pub mod analysis;
pub mod blowup;
pub mod error;
pub mod field;
pub mod grid;
pub mod ineq;
pub mod integrator;
pub mod kernel;
pub mod sweep;
pub mod system;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::Grid;
pub use integrator::{
    duhamel_step, picard_iterate, simulate, simulate_observed, BlowupReport, NormName, NormTrace,
    PicardResult, RunStatus, SimOptions, StatePair,
};
pub use kernel::{
    cutoff_split, kernel_multiplier, propagate_linear, semigroup_convolve, CutoffConfig,
    MultiplierKind,
};
pub use system::{InitialDataPreset, SystemParams};
