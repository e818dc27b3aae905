//! Split-step Fourier propagation of `iħ ∂ψ/∂t = −(ħ²/2m) ψ'' + V(x, t) ψ`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::OracleError;
use crate::model::PolynomialPotential;

/// Fraction of the domain at each end covered by the absorbing ramp.
const EDGE_FRACTION: f64 = 0.05;
const MAX_NORM_DRIFT: f64 = 1e-5;

/// Uniform periodic grid `x_j = −L + j·dx`, `dx = 2L/M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub half_width: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self, OracleError> {
        if !points.is_power_of_two() || points < 4 {
            return Err(OracleError::GridSize(points));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(OracleError::Invalid("grid half-width must be positive"));
        }
        Ok(Self { half_width, points })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    fn wavenumber(&self, j: usize) -> f64 {
        let n = self.points as isize;
        let j = j as isize;
        let shifted = if j < n / 2 { j } else { j - n };
        2.0 * PI * shifted as f64 / (2.0 * self.half_width)
    }

    fn edge_points(&self) -> usize {
        ((EDGE_FRACTION * self.points as f64).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct WaveState {
    pub grid: Grid,
    pub psi: Vec<Complex64>,
    pub hbar: f64,
    pub mass: f64,
    pub time: f64,
    /// Norm removed by the absorbing layer so far.
    pub absorbed: f64,
    pub absorb: bool,
}

impl WaveState {
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Largest `|ψ|` in the outer edge layers relative to the global maximum.
    pub fn edge_ratio(&self) -> f64 {
        let k = self.grid.edge_points();
        let max = self.psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let n = self.psi.len();
        let edge = self.psi[..k].iter().chain(&self.psi[n - k..]).map(|z| z.norm()).fold(0.0, f64::max);
        edge / max
    }
}

/// `ψ(x) ∝ exp(−η (x − x₀)²/ħ)` normalised to unit L² norm.
pub fn init_gaussian(x0: f64, eta: f64, hbar: f64, mass: f64, grid: Grid) -> Result<WaveState, OracleError> {
    if !(eta > 0.0 && hbar > 0.0 && mass > 0.0) {
        return Err(OracleError::Invalid("eta, hbar and mass must be positive"));
    }
    // standard deviation of ψ itself
    let width = (hbar / (2.0 * eta)).sqrt();
    let needed = x0.abs() + 10.0 * width;
    let inner = grid.half_width * (1.0 - 2.0 * EDGE_FRACTION);
    if needed > inner {
        return Err(OracleError::DomainTooSmall {
            needed: needed / (1.0 - 2.0 * EDGE_FRACTION),
            half_width: grid.half_width,
        });
    }
    if grid.dx() > 0.5 * width {
        return Err(OracleError::Unresolved { dx: grid.dx(), width });
    }
    let mut psi: Vec<Complex64> = (0..grid.points)
        .map(|j| {
            let d = grid.x(j) - x0;
            Complex64::new((-eta * d * d / hbar).exp(), 0.0)
        })
        .collect();
    let norm = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    Ok(WaveState { grid, psi, hbar, mass, time: 0.0, absorbed: 0.0, absorb: false })
}

struct Propagator {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kinetic: Vec<Complex64>,
    mask: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl Propagator {
    fn new(state: &WaveState, dt: f64) -> Self {
        let m = state.grid.points;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scale = 1.0 / m as f64;
        let kinetic = (0..m)
            .map(|j| {
                let k = state.grid.wavenumber(j);
                Complex64::from_polar(scale, -state.hbar * k * k * dt / (2.0 * state.mass))
            })
            .collect();
        let edge = state.grid.edge_points();
        let mask = (0..m)
            .map(|j| {
                let depth = j.min(m - 1 - j);
                if depth >= edge {
                    1.0
                } else {
                    (0.5 * PI * depth as f64 / edge as f64).sin().powi(2)
                }
            })
            .collect();
        let scratch =
            vec![Complex64::default(); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        Self { forward, inverse, kinetic, mask, scratch }
    }

    fn step(&mut self, state: &mut WaveState, pot: &PolynomialPotential, dt: f64) {
        let t_mid = state.time + 0.5 * dt;
        let half_kick = |x: f64| Complex64::from_polar(1.0, -pot.eval_potential(x, t_mid) * dt / (2.0 * state.hbar));
        for (j, z) in state.psi.iter_mut().enumerate() {
            *z *= half_kick(state.grid.x(j));
        }
        self.forward.process_with_scratch(&mut state.psi, &mut self.scratch);
        for (z, k) in state.psi.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.inverse.process_with_scratch(&mut state.psi, &mut self.scratch);
        for (j, z) in state.psi.iter_mut().enumerate() {
            *z *= half_kick(state.grid.x(j));
        }
        if state.absorb {
            let before = state.norm();
            for (z, w) in state.psi.iter_mut().zip(&self.mask) {
                *z *= *w;
            }
            state.absorbed += before - state.norm();
        }
        state.time += dt;
    }
}

/// Upper bound on `dt` accepted by [`propagate`]: `dt·max|V|/ħ < 1/2`, with
/// `max|V|` taken over the grid as `|V_static(x)| + |A x|`.
pub fn max_time_step(grid: &Grid, pot: &PolynomialPotential, hbar: f64) -> f64 {
    let vmax = (0..grid.points)
        .map(|j| {
            let x = grid.x(j);
            pot.static_value(x).abs() + (pot.drive_amp() * x).abs()
        })
        .fold(0.0, f64::max);
    0.5 * hbar / vmax
}

fn check_time_step(state: &WaveState, pot: &PolynomialPotential, dt: f64) -> Result<(), OracleError> {
    let ratio = 0.5 * dt / max_time_step(&state.grid, pot, state.hbar);
    if ratio >= 0.5 {
        return Err(OracleError::TimeStepTooLarge { ratio });
    }
    Ok(())
}

fn check_norm(state: &WaveState, reference: f64) -> Result<(), OracleError> {
    let drift = (state.norm() + state.absorbed - reference).abs() / reference;
    if drift > MAX_NORM_DRIFT || !drift.is_finite() {
        return Err(OracleError::Unstable { drift, time: state.time });
    }
    Ok(())
}

/// Advances `state` by `steps` Strang steps of size `dt`.
pub fn propagate(state: &mut WaveState, pot: &PolynomialPotential, dt: f64, steps: usize) -> Result<(), OracleError> {
    check_time_step(state, pot, dt)?;
    let reference = state.norm() + state.absorbed;
    let mut prop = Propagator::new(state, dt);
    for _ in 0..steps {
        prop.step(state, pot, dt);
    }
    check_norm(state, reference)
}

/// Amplitude and density averages at a sample time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AverageSeries {
    pub times: Vec<f64>,
    /// `∫xψ/∫ψ` over the grid; `None` where `|∫ψ| < 10⁻⁸ ∫|ψ|`.
    pub amp_avg: Vec<Option<Complex64>>,
    /// `∫x|ψ|²/∫|ψ|²`.
    pub dens_avg: Vec<f64>,
}

/// Trapezoid (periodic-grid) quadrature of both averages for one state.
pub fn quantum_averages(state: &WaveState) -> (Option<Complex64>, f64) {
    let g = &state.grid;
    let (mut s0, mut s1, mut abs0) = (Complex64::default(), Complex64::default(), 0.0);
    let (mut d0, mut d1) = (0.0, 0.0);
    for (j, z) in state.psi.iter().enumerate() {
        let x = g.x(j);
        s0 += z;
        s1 += z * x;
        abs0 += z.norm();
        let p = z.norm_sqr();
        d0 += p;
        d1 += p * x;
    }
    let amp = if s0.norm() < 1e-8 * abs0 { None } else { Some(s1 / s0) };
    (amp, d1 / d0)
}

/// Propagates `state` through the sample `times` (non-decreasing, not before
/// `state.time`) with steps no longer than `max_dt`, recording averages.
pub fn evolve_averages(
    state: &mut WaveState,
    pot: &PolynomialPotential,
    times: &[f64],
    max_dt: f64,
) -> Result<AverageSeries, OracleError> {
    if !(max_dt > 0.0) {
        return Err(OracleError::Invalid("time step must be positive"));
    }
    check_time_step(state, pot, max_dt)?;
    let reference = state.norm() + state.absorbed;
    let mut series = AverageSeries::default();
    let mut cached: Option<(f64, Propagator)> = None;
    for &target in times {
        let span = target - state.time;
        if span < -1e-12 * target.abs().max(1.0) {
            return Err(OracleError::Invalid("sample times must be non-decreasing"));
        }
        if span > 0.0 {
            let n = (span / max_dt).ceil().max(1.0) as usize;
            let dt = span / n as f64;
            let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= 1e-15 * dt);
            if !reuse {
                cached = Some((dt, Propagator::new(state, dt)));
            }
            let prop = &mut cached.as_mut().expect("propagator prepared").1;
            for _ in 0..n {
                prop.step(state, pot, dt);
            }
            state.time = target;
            check_norm(state, reference)?;
        }
        let (amp, dens) = quantum_averages(state);
        series.times.push(target);
        series.amp_avg.push(amp);
        series.dens_avg.push(dens);
    }
    Ok(series)
}
