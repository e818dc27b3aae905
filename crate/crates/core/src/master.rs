//! Master-equation residuals `R(λ, T)`, their roots `λ*(T)`, and
//! continuation of the roots along a grid of horizons.

use nalgebra::DVector;
use thiserror::Error;

use crate::framework::{self, FrameworkError, LinearBVP};
use crate::model::{local_expand, Branch, ModelError, PolynomialPotential};
use crate::oscillator::{self, kernels, OscillatorError, ResonancePolicy};

/// Below this `|cos ϖT|` (amplitude) or `|sin ϖT|` (density, general) a
/// horizon is flagged instead of solved.
pub const SINGULAR_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MasterError {
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
    #[error(transparent)]
    Framework(#[from] FrameworkError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the amplitude variant is defined for x0 = 0 only, got {0}")]
    AmplitudeCenter(f64),
    #[error("time grid must be non-empty and strictly increasing with positive entries")]
    InvalidGrid,
    #[error("invalid solver settings: {0}")]
    Settings(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `λ + (1/m)∫₀ᵀ g sn(t) dt`
    Amplitude,
    /// `(1/m)∫₀ᵀ g sn(T−t) dt − (λ − x₀) c(T)`
    Density,
    /// `x_cr(λ)` from the numeric boundary-value pipeline
    GeneralBVP,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Half-width of the first scan window around the seed.
    pub initial_half_width: f64,
    /// Largest scan half-width before giving up.
    pub max_half_width: f64,
    /// Accepted `|R(λ)|` at a root.
    pub tolerance: f64,
    /// Bisection iterations per bracket.
    pub max_iterations: usize,
    /// Residual samples per scan window.
    pub scan_points: usize,
    /// RK4 steps for the general-BVP variant.
    pub bvp_steps: usize,
    pub resonance: ResonancePolicy,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            initial_half_width: 0.05,
            max_half_width: 100.0,
            tolerance: 1e-10,
            max_iterations: 200,
            scan_points: 32,
            bvp_steps: framework::DEFAULT_STEPS,
            resonance: ResonancePolicy::Reject,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<(), MasterError> {
        if !(self.initial_half_width > 0.0 && self.max_half_width >= self.initial_half_width) {
            return Err(MasterError::Settings("need 0 < initial_half_width <= max_half_width"));
        }
        if !(self.tolerance > 0.0) {
            return Err(MasterError::Settings("tolerance must be positive"));
        }
        if self.scan_points < 2 || self.max_iterations == 0 {
            return Err(MasterError::Settings("scan_points >= 2 and max_iterations >= 1 required"));
        }
        if self.bvp_steps < 2 || !self.bvp_steps.is_multiple_of(2) {
            return Err(MasterError::Settings("bvp_steps must be even"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterResidualSpec {
    pub variant: Variant,
    pub pot: PolynomialPotential,
    pub x0: f64,
    pub solver: SolverSettings,
}

impl MasterResidualSpec {
    pub fn new(
        variant: Variant,
        pot: PolynomialPotential,
        x0: f64,
        solver: SolverSettings,
    ) -> Result<Self, MasterError> {
        if variant == Variant::Amplitude && x0 != 0.0 {
            return Err(MasterError::AmplitudeCenter(x0));
        }
        solver.validate()?;
        Ok(Self { variant, pot, x0, solver })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Ok,
    NearSingular,
    Resonant,
    NoRoot,
    MultiRoot,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "Ok",
            Status::NearSingular => "NearSingular",
            Status::Resonant => "Resonant",
            Status::NoRoot => "NoRoot",
            Status::MultiRoot => "MultiRoot",
        }
    }

    /// A root was found and certified.
    pub fn has_root(&self) -> bool {
        matches!(self, Status::Ok | Status::MultiRoot)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSolution {
    pub lambda: f64,
    pub residual: f64,
    pub status: Status,
    /// Every sign-change interval of the scan window that produced the
    /// answer, including rejected poles.
    pub brackets: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub lambda: f64,
    /// `ϖ(λ)`, negative (`−κ`) on the hyperbolic branch.
    pub omega_eff: f64,
    pub residual: f64,
    pub status: Status,
    pub brackets: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn count(&self, status: Status) -> usize {
        self.samples.iter().filter(|s| s.status == status).count()
    }
}

pub fn residual_amplitude(spec: &MasterResidualSpec, lambda: f64, horizon: f64) -> Result<f64, MasterError> {
    let model = local_expand(&spec.pot, lambda);
    let j = oscillator::drive_integrals(&model, horizon, spec.solver.resonance)?;
    Ok(lambda + j.js / model.mass)
}

pub fn residual_density(spec: &MasterResidualSpec, lambda: f64, horizon: f64) -> Result<f64, MasterError> {
    let model = local_expand(&spec.pot, lambda);
    let j = oscillator::drive_integrals(&model, horizon, spec.solver.resonance)?;
    let (c, _) = kernels(model.omega_eff_sq, horizon);
    Ok(j.jr / model.mass - (lambda - spec.x0) * c)
}

/// `x_cr(λ)` from [`framework::critical_center`]; the condition `x_cr = 0`
/// is the general master equation.
pub fn residual_general(spec: &MasterResidualSpec, lambda: f64, horizon: f64) -> Result<f64, MasterError> {
    let vp = spec.pot.to_vector();
    let shift = DVector::from_element(1, lambda);
    let zero = DVector::zeros(1);
    let x0 = DVector::from_element(1, spec.x0);
    let bvp = LinearBVP::new(&vp, &shift, horizon, &zero, &zero, spec.pot.mass()).with_steps(spec.solver.bvp_steps);
    Ok(framework::critical_center(&bvp, &x0)?[0])
}

pub fn residual(spec: &MasterResidualSpec, lambda: f64, horizon: f64) -> Result<f64, MasterError> {
    match spec.variant {
        Variant::Amplitude => residual_amplitude(spec, lambda, horizon),
        Variant::Density => residual_density(spec, lambda, horizon),
        Variant::GeneralBVP => residual_general(spec, lambda, horizon),
    }
}

/// Whether `(λ, T)` lies in the variant's excluded set.
pub fn near_singular(spec: &MasterResidualSpec, lambda: f64, horizon: f64) -> bool {
    let model = local_expand(&spec.pot, lambda);
    match model.branch {
        Branch::Degenerate => true,
        Branch::Hyperbolic => false,
        Branch::Oscillatory => {
            let phase = model.rate() * horizon;
            match spec.variant {
                Variant::Amplitude => phase.cos().abs() < SINGULAR_THRESHOLD,
                // sn(T) ≈ T is harmless as T → 0; only the focal points ϖT ≈ kπ count
                Variant::Density | Variant::GeneralBVP => phase > 1.0 && phase.sin().abs() < SINGULAR_THRESHOLD,
            }
        }
    }
}

fn classify_error(e: &MasterError) -> Status {
    match e {
        MasterError::Oscillator(OscillatorError::Resonance { .. }) => Status::Resonant,
        _ => Status::NearSingular,
    }
}

fn failed(status: Status) -> RootSolution {
    RootSolution { lambda: f64::NAN, residual: f64::NAN, status, brackets: Vec::new() }
}

/// Bisection on a sign-change interval; `None` if the interval holds a pole.
fn bisect(spec: &MasterResidualSpec, horizon: f64, mut a: f64, mut fa: f64, mut b: f64) -> Option<(f64, f64)> {
    let tol = spec.solver.tolerance;
    let mut best = (f64::NAN, f64::INFINITY);
    for _ in 0..spec.solver.max_iterations {
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        let fm = residual(spec, mid, horizon).ok()?;
        if fm.abs() < best.1.abs() {
            best = (mid, fm);
        }
        if fm == 0.0 {
            break;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    (best.1.abs() <= tol).then_some(best)
}

/// Root of the master equation nearest to `seed`.
pub fn solve_lambda(spec: &MasterResidualSpec, horizon: f64, seed: f64) -> RootSolution {
    if !(horizon > 0.0 && horizon.is_finite() && seed.is_finite()) {
        return failed(Status::NoRoot);
    }
    if near_singular(spec, seed, horizon) {
        return failed(Status::NearSingular);
    }
    match residual(spec, seed, horizon) {
        Err(e) => return failed(classify_error(&e)),
        Ok(0.0) => {
            return RootSolution { lambda: seed, residual: 0.0, status: Status::Ok, brackets: vec![(seed, seed)] };
        }
        Ok(_) => {}
    }

    let settings = &spec.solver;
    let mut half = settings.initial_half_width;
    loop {
        let n = settings.scan_points;
        let pts: Vec<(f64, Option<f64>)> = (0..=n)
            .map(|i| {
                let l = seed - half + 2.0 * half * i as f64 / n as f64;
                (l, residual(spec, l, horizon).ok().filter(|v| v.is_finite()))
            })
            .collect();
        let mut brackets = Vec::new();
        let mut roots = Vec::new();
        for w in pts.windows(2) {
            if let ((a, Some(fa)), (b, Some(fb))) = (w[0], w[1]) {
                if fa == 0.0 {
                    brackets.push((a, a));
                    roots.push((a, 0.0));
                } else if fa.signum() != fb.signum() && fb != 0.0 {
                    brackets.push((a, b));
                    if let Some(root) = bisect(spec, horizon, a, fa, b) {
                        roots.push(root);
                    }
                }
            }
        }
        if !roots.is_empty() {
            let &(lambda, res) =
                roots.iter().min_by(|x, y| (x.0 - seed).abs().total_cmp(&(y.0 - seed).abs())).expect("non-empty");
            let status = if near_singular(spec, lambda, horizon) {
                Status::NearSingular
            } else if roots.len() > 1 {
                Status::MultiRoot
            } else {
                Status::Ok
            };
            return RootSolution { lambda, residual: res, status, brackets };
        }
        if half >= settings.max_half_width {
            return RootSolution { lambda: f64::NAN, residual: f64::NAN, status: Status::NoRoot, brackets };
        }
        half = (2.0 * half).min(settings.max_half_width);
    }
}

/// Solves along `grid`, seeding each horizon with the last certified root.
/// If that seed finds nothing (typically just past a singular horizon, where
/// the root jumps) the horizon is retried from `seed0`.
pub fn continue_trajectory(spec: &MasterResidualSpec, grid: &[f64], seed0: f64) -> Result<Trajectory, MasterError> {
    if grid.is_empty()
        || grid[0] <= 0.0
        || grid.windows(2).any(|w| !(w[1] > w[0]))
        || grid.iter().any(|t| !t.is_finite())
    {
        return Err(MasterError::InvalidGrid);
    }
    let mut seed = seed0;
    let samples = grid
        .iter()
        .map(|&t| {
            let mut sol = solve_lambda(spec, t, seed);
            if sol.status == Status::NoRoot && seed != seed0 {
                sol = solve_lambda(spec, t, seed0);
            }
            let omega_eff =
                if sol.lambda.is_finite() { local_expand(&spec.pot, sol.lambda).omega_eff_signed() } else { f64::NAN };
            if sol.status.has_root() {
                seed = sol.lambda;
            }
            Sample {
                t,
                lambda: sol.lambda,
                omega_eff,
                residual: sol.residual,
                status: sol.status,
                brackets: sol.brackets,
            }
        })
        .collect();
    Ok(Trajectory { samples })
}
