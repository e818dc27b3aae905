//! Closed forms for the forced harmonic oscillator `m ü + m ϖ² u = g(t)`,
//! `g(t) = −d + A sin(Ω t)`.
//!
//! Everything is written with the kernels
//!
//! ```text
//! c(t)  = cos ϖt,      sn(t) = sin(ϖt)/ϖ       (ϖ² > 0)
//! c(t)  = cosh κt,     sn(t) = sinh(κt)/κ      (ϖ² = −κ² < 0)
//! ```
//!
//! which are entire in `ϖ²`, so the hyperbolic branch is the analytic
//! continuation of the oscillatory one.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{Branch, LocalQuadraticModel};

/// `|ϖ − Ω| < RESONANCE_TOL · max(ϖ, Ω, 1)` counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-6;
/// `|sin ϖT| < SINGULAR_HORIZON_TOL` counts as a focal horizon.
pub const SINGULAR_HORIZON_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OscillatorError {
    #[error("horizon must be positive and finite, got {0}")]
    NonPositiveHorizon(f64),
    #[error("focal horizon: sin(ϖT) ≈ 0 at T = {horizon}")]
    SingularHorizon { horizon: f64 },
    #[error("resonance: ϖ = {omega_eff} ≈ Ω = {drive_freq}")]
    Resonance { omega_eff: f64, drive_freq: f64 },
    #[error("degenerate effective frequency ϖ² = {omega_eff_sq}")]
    DegenerateFrequency { omega_eff_sq: f64 },
}

/// What to do when `ϖ ≈ Ω`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ResonancePolicy {
    #[default]
    Reject,
    /// Use the analytic limit of the drive integrals.
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryProblem {
    pub model: LocalQuadraticModel,
    pub horizon: f64,
    /// `ȳ = u(0)`
    pub left: f64,
    /// `x̄ = u(T)`
    pub right: f64,
}

/// `u(t) = c1·s(t) + c2·k(t) + D sin(Ωt) + C` with `(s, k) = (sin ϖt, cos ϖt)`
/// on the oscillatory branch and `(sinh κt, cosh κt)` on the hyperbolic one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSolution {
    pub c1: f64,
    pub c2: f64,
    pub part_const: f64,
    pub part_sin: f64,
    pub model: LocalQuadraticModel,
}

impl OscillatorSolution {
    pub fn value(&self, t: f64) -> f64 {
        let (s, k) = self.modes(t);
        self.c1 * s + self.c2 * k + self.part_sin * (self.model.drive_freq * t).sin() + self.part_const
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let r = self.model.rate();
        let (s, k) = self.modes(t);
        let hom = if self.hyperbolic() { r * (self.c1 * k + self.c2 * s) } else { r * (self.c1 * k - self.c2 * s) };
        let om = self.model.drive_freq;
        hom + self.part_sin * om * (om * t).cos()
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        let (s, k) = self.modes(t);
        let om = self.model.drive_freq;
        -self.model.omega_eff_sq * (self.c1 * s + self.c2 * k) - self.part_sin * om * om * (om * t).sin()
    }

    /// `m ü + m ϖ² u − g(t)`.
    pub fn ode_residual(&self, t: f64) -> f64 {
        let m = self.model.mass;
        m * self.acceleration(t) + m * self.model.omega_eff_sq * self.value(t) - self.model.g(t)
    }

    fn hyperbolic(&self) -> bool {
        self.model.omega_eff_sq < 0.0
    }

    fn modes(&self, t: f64) -> (f64, f64) {
        let x = self.model.rate() * t;
        if self.hyperbolic() {
            (x.sinh(), x.cosh())
        } else {
            (x.sin(), x.cos())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterAction {
    pub value: f64,
    /// `∂S/∂x̄ = m u̇(T)`
    pub d_dright: f64,
    /// `∂S/∂ȳ = −m u̇(0)`
    pub d_dleft: f64,
}

/// `(c(t), sn(t))` for a given `ϖ²`.
pub fn kernels(omega_eff_sq: f64, t: f64) -> (f64, f64) {
    let r = omega_eff_sq.abs().sqrt();
    if omega_eff_sq > 0.0 {
        ((r * t).cos(), (r * t).sin() / r)
    } else if omega_eff_sq < 0.0 {
        ((r * t).cosh(), (r * t).sinh() / r)
    } else {
        (1.0, t)
    }
}

/// `∫₀ᵀ sn(t) dt = (1 − c(T))/ϖ²`, evaluated without cancellation.
fn sn_integral(omega_eff_sq: f64, t: f64) -> f64 {
    let (_, h) = kernels(omega_eff_sq, 0.5 * t);
    2.0 * h * h
}

fn check_horizon(t: f64) -> Result<(), OscillatorError> {
    if !(t.is_finite() && t > 0.0) {
        return Err(OscillatorError::NonPositiveHorizon(t));
    }
    Ok(())
}

fn check_degenerate(model: &LocalQuadraticModel) -> Result<(), OscillatorError> {
    if model.branch == Branch::Degenerate {
        return Err(OscillatorError::DegenerateFrequency { omega_eff_sq: model.omega_eff_sq });
    }
    Ok(())
}

fn drive_active(model: &LocalQuadraticModel) -> bool {
    model.drive_amp != 0.0 && model.drive_freq != 0.0
}

/// `true` when the drive is present and `ϖ ≈ |Ω|` on the oscillatory branch.
pub fn is_resonant(model: &LocalQuadraticModel) -> bool {
    if !drive_active(model) || model.omega_eff_sq <= 0.0 {
        return false;
    }
    let w = model.rate();
    let om = model.drive_freq.abs();
    (w - om).abs() < RESONANCE_TOL * w.max(om).max(1.0)
}

/// Checks degeneracy and resonance; returns whether the resonance-safe
/// exponential evaluation must be used.
fn admissible(model: &LocalQuadraticModel, policy: ResonancePolicy) -> Result<bool, OscillatorError> {
    check_degenerate(model)?;
    if is_resonant(model) {
        return match policy {
            ResonancePolicy::Reject => {
                Err(OscillatorError::Resonance { omega_eff: model.rate(), drive_freq: model.drive_freq })
            }
            ResonancePolicy::Limit => Ok(true),
        };
    }
    Ok(false)
}

/// `∫₀ᵀ g(t) sn(t) dt` and `∫₀ᵀ g(t) sn(T − t) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveIntegrals {
    pub js: f64,
    pub jr: f64,
}

pub fn drive_integrals(
    model: &LocalQuadraticModel,
    horizon: f64,
    policy: ResonancePolicy,
) -> Result<DriveIntegrals, OscillatorError> {
    check_horizon(horizon)?;
    if admissible(model, policy)? {
        let e = ExpForm::new(model, horizon);
        return Ok(DriveIntegrals { js: e.integral(&e.inner), jr: e.integral(&e.outer) });
    }
    let w2 = model.omega_eff_sq;
    let t = horizon;
    let (c, sn) = kernels(w2, t);
    let bias_part = -model.bias * sn_integral(w2, t);
    let (amp, om) = (model.drive_amp, model.drive_freq);
    if !drive_active(model) {
        return Ok(DriveIntegrals { js: bias_part, jr: bias_part });
    }
    let (so, co) = ((om * t).sin(), (om * t).cos());
    let js = bias_part + amp * (so * c - om * co * sn) / (om * om - w2);
    let jr = bias_part + amp * (so - om * sn) / (w2 - om * om);
    Ok(DriveIntegrals { js, jr })
}

/// `I_s = ∫₀ᵀ g(t) sin(ϖt) dt`; on the hyperbolic branch `∫₀ᵀ g(t) sinh(κt) dt`.
pub fn response_sin(model: &LocalQuadraticModel, horizon: f64) -> Result<f64, OscillatorError> {
    response_sin_with(model, horizon, ResonancePolicy::Reject)
}

pub fn response_sin_with(
    model: &LocalQuadraticModel,
    horizon: f64,
    policy: ResonancePolicy,
) -> Result<f64, OscillatorError> {
    Ok(model.rate() * drive_integrals(model, horizon, policy)?.js)
}

/// `I_r = ∫₀ᵀ g(t) sin(ϖ(T − t)) dt`; on the hyperbolic branch with `sinh κ(T − t)`.
pub fn response_retarded(model: &LocalQuadraticModel, horizon: f64) -> Result<f64, OscillatorError> {
    response_retarded_with(model, horizon, ResonancePolicy::Reject)
}

pub fn response_retarded_with(
    model: &LocalQuadraticModel,
    horizon: f64,
    policy: ResonancePolicy,
) -> Result<f64, OscillatorError> {
    Ok(model.rate() * drive_integrals(model, horizon, policy)?.jr)
}

/// `K = ∫₀ᵀ∫₀ᵗ g(t) g(s) sn(T − t) sn(s) ds dt`.
///
/// Equals `I_dd/ϖ²` with `I_dd` the double integral over `sin ϖ(T−t) sin ϖs`.
pub fn double_response(
    model: &LocalQuadraticModel,
    horizon: f64,
    policy: ResonancePolicy,
) -> Result<f64, OscillatorError> {
    check_horizon(horizon)?;
    admissible(model, policy)?;
    let e = ExpForm::new(model, horizon);
    let t = horizon;
    let mut sum = Complex64::default();
    for &(a, alpha) in &e.outer {
        for &(b, beta) in &e.inner {
            sum += a * b * t * t * double_exp(Complex64::i() * alpha * t, Complex64::i() * beta * t);
        }
    }
    Ok(sum.re)
}

/// Solution of the two-point boundary problem.
pub fn solve_boundary(bp: &BoundaryProblem) -> Result<OscillatorSolution, OscillatorError> {
    let model = &bp.model;
    let t = bp.horizon;
    check_horizon(t)?;
    admissible(model, ResonancePolicy::Reject)?;
    check_focal(model, t)?;
    let (m, w2) = (model.mass, model.omega_eff_sq);
    let part_const = -model.bias / (m * w2);
    let part_sin =
        if drive_active(model) { model.drive_amp / ((w2 - model.drive_freq * model.drive_freq) * m) } else { 0.0 };
    let (c, sn) = kernels(w2, t);
    let alpha = bp.left - part_const;
    let beta = (bp.right - part_const - part_sin * (model.drive_freq * t).sin() - alpha * c) / sn;
    Ok(OscillatorSolution { c1: beta / model.rate(), c2: alpha, part_const, part_sin, model: *model })
}

fn check_focal(model: &LocalQuadraticModel, t: f64) -> Result<(), OscillatorError> {
    if model.omega_eff_sq > 0.0 && (model.rate() * t).sin().abs() < SINGULAR_HORIZON_TOL {
        return Err(OscillatorError::SingularHorizon { horizon: t });
    }
    Ok(())
}

/// Classical action `∫₀ᵀ [(m/2)u̇² − (mϖ²/2)u² + g u] dt` of the boundary solution.
pub fn master_action(bp: &BoundaryProblem) -> Result<MasterAction, OscillatorError> {
    master_action_with(bp, ResonancePolicy::Reject)
}

pub fn master_action_with(bp: &BoundaryProblem, policy: ResonancePolicy) -> Result<MasterAction, OscillatorError> {
    let model = &bp.model;
    let t = bp.horizon;
    check_horizon(t)?;
    admissible(model, policy)?;
    check_focal(model, t)?;
    let DriveIntegrals { js, jr } = drive_integrals(model, t, policy)?;
    let k = double_response(model, t, policy)?;
    let m = model.mass;
    let (c, sn) = kernels(model.omega_eff_sq, t);
    let (x, y) = (bp.right, bp.left);
    let bracket = c * (y * y + x * x) - 2.0 * x * y + 2.0 * x * js / m + 2.0 * y * jr / m - 2.0 * k / (m * m);
    Ok(MasterAction {
        value: m / (2.0 * sn) * bracket,
        d_dright: (m * c * x - m * y + js) / sn,
        d_dleft: (m * c * y - m * x + jr) / sn,
    })
}

/// Left endpoint `ȳ` making `∂S/∂ȳ = 0` for fixed `x̄`: `(x̄ − J_r/m)/c(T)`.
pub fn stationary_left(
    model: &LocalQuadraticModel,
    horizon: f64,
    right: f64,
    policy: ResonancePolicy,
) -> Result<f64, OscillatorError> {
    let jr = drive_integrals(model, horizon, policy)?.jr;
    let (c, _) = kernels(model.omega_eff_sq, horizon);
    Ok((right - jr / model.mass) / c)
}

/// Right endpoint `x̄` making `∂S/∂x̄ = 0` for fixed `ȳ`: `(ȳ − J_s/m)/c(T)`.
pub fn stationary_right(
    model: &LocalQuadraticModel,
    horizon: f64,
    left: f64,
    policy: ResonancePolicy,
) -> Result<f64, OscillatorError> {
    let js = drive_integrals(model, horizon, policy)?.js;
    let (c, _) = kernels(model.omega_eff_sq, horizon);
    Ok((left - js / model.mass) / c)
}

type Terms = Vec<(Complex64, Complex64)>;

/// Exponential-sum representation `Σ cⱼ e^{iγⱼ t}` of the integrands.
struct ExpForm {
    horizon: f64,
    /// `g(s) sn(s)`
    inner: Terms,
    /// `g(t) sn(T − t)`
    outer: Terms,
}

impl ExpForm {
    fn new(model: &LocalQuadraticModel, horizon: f64) -> Self {
        let i = Complex64::i();
        let mut g: Terms = vec![(Complex64::new(-model.bias, 0.0), Complex64::default())];
        if drive_active(model) {
            let half = model.drive_amp / (2.0 * i);
            let om = Complex64::new(model.drive_freq, 0.0);
            g.push((half, om));
            g.push((-half, -om));
        }
        let r = model.rate();
        let sn: Terms = if model.omega_eff_sq > 0.0 {
            let c = 1.0 / (2.0 * i * r);
            vec![(c, Complex64::new(r, 0.0)), (-c, Complex64::new(-r, 0.0))]
        } else {
            let c = Complex64::new(0.5 / r, 0.0);
            vec![(c, -i * r), (-c, i * r)]
        };
        let sn_rev: Terms = sn.iter().map(|&(c, gam)| (c * (i * gam * horizon).exp(), -gam)).collect();
        Self { horizon, inner: product(&g, &sn), outer: product(&g, &sn_rev) }
    }

    fn integral(&self, terms: &Terms) -> f64 {
        let t = self.horizon;
        terms.iter().map(|&(c, gam)| c * t * phi1(Complex64::i() * gam * t)).sum::<Complex64>().re
    }
}

fn product(a: &Terms, b: &Terms) -> Terms {
    a.iter()
        .flat_map(|&(ca, ga)| b.iter().map(move |&(cb, gb)| (ca * cb, ga + gb)))
        .filter(|(c, _)| *c != Complex64::default())
        .collect()
}

/// `(e^z − 1)/z`
fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for j in 2..24 {
            term *= z / j as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `Mₙ(z) = ∫₀¹ τⁿ e^{zτ} dτ` for `n = 1..=4`.
fn moments(z: Complex64) -> [Complex64; 4] {
    let mut out = [Complex64::default(); 4];
    if z.norm() < 1.0 {
        for (idx, m) in out.iter_mut().enumerate() {
            let n = (idx + 1) as f64;
            let mut pow = Complex64::new(1.0, 0.0);
            let mut fact = 1.0;
            for j in 0..30 {
                if j > 0 {
                    pow *= z;
                    fact *= j as f64;
                }
                *m += pow / (fact * (n + j as f64 + 1.0));
            }
        }
    } else {
        let ez = z.exp();
        let mut prev = phi1(z);
        for (idx, m) in out.iter_mut().enumerate() {
            prev = (ez - (idx + 1) as f64 * prev) / z;
            *m = prev;
        }
    }
    out
}

/// `∫₀¹∫₀^τ e^{a τ + b σ} dσ dτ`.
fn double_exp(a: Complex64, b: Complex64) -> Complex64 {
    if b.norm() > 1e-3 {
        (phi1(a + b) - phi1(a)) / b
    } else {
        let m = moments(a);
        m[0] + b * m[1] / 2.0 + b * b * m[2] / 6.0 + b * b * b * m[3] / 24.0
    }
}
