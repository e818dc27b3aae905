//! Independent reference computations used to check the solvers.

mod det;
mod ehrenfest;
mod quad;
mod wave;

use thiserror::Error;

pub use det::{dense_prefactor, determinant, discrete_action_hessian};
pub use ehrenfest::{ehrenfest, ehrenfest_states, ClassicalState};
pub use quad::{quad_adaptive, quad_triangle};
pub use wave::{
    evolve_averages, init_gaussian, max_time_step, propagate, quantum_averages, AverageSeries, Grid, WaveState,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("quadrature tolerance not met on [{a}, {b}]")]
    ToleranceNotMet { a: f64, b: f64 },
    #[error("matrix is singular (zero pivot in column {column})")]
    SingularMatrix { column: usize },
    #[error("initial packet does not fit the domain: needs half-width {needed}, have {half_width}")]
    DomainTooSmall { needed: f64, half_width: f64 },
    #[error("grid spacing {dx} does not resolve packet width {width}")]
    Unresolved { dx: f64, width: f64 },
    #[error("grid size {0} is not a power of two")]
    GridSize(usize),
    #[error("norm drift {drift:e} at t = {time}")]
    Unstable { drift: f64, time: f64 },
    #[error("time step too large: dt·max|V|/ħ = {ratio}")]
    TimeStepTooLarge { ratio: f64 },
    #[error("invalid argument: {0}")]
    Invalid(&'static str),
}
