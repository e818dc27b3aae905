//! Quasiclassical trajectories of driven polynomial oscillators.
//!
//! - [`model`]: potentials and their local quadratic expansion
//! - [`oscillator`]: closed forms for the forced harmonic oscillator
//! - [`master`]: master-equation residuals, root finding, continuation in `T`
//! - [`framework`]: the n-dimensional boundary-value pipeline
//! - [`pathint`]: discretized path integrals, critical paths, prefactors
//! - [`oracle`]: independent reference computations

pub mod framework;
pub mod master;
pub mod model;
pub mod oracle;
pub mod oscillator;
pub mod pathint;
