//! The n-dimensional master-equation pipeline: the linear boundary problem
//! obtained by expanding `V` to second order at `λ`, its action, and the
//! critical points of that action in the boundary data.
//!
//! The boundary problem is
//!
//! ```text
//! m ü + H(λ, τ) u + V'(λ, τ) = 0,    u(0) = y,  u(T) = x,
//! ```
//!
//! whose one-dimensional instance is `m ü + m ϖ² u = g`. The literal form
//! `ü = H u + V'` is available through [`BvpForm::Literal`].

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::VectorPotential;

pub const DEFAULT_STEPS: usize = 512;
const CONJUGATE_TOL: f64 = 1e-9;
const STEP_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameworkError {
    #[error("conjugate horizon: shooting determinant {det:e}")]
    ConjugatePoint { det: f64 },
    #[error("Newton iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid boundary problem: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BvpForm {
    /// `m ü + H u + V' = 0`
    #[default]
    Reconciled,
    /// `ü = H u + V'`
    Literal,
}

#[derive(Clone, Copy)]
pub struct LinearBVP<'a> {
    pub potential: &'a dyn VectorPotential,
    pub shift: &'a DVector<f64>,
    pub horizon: f64,
    pub left: &'a DVector<f64>,
    pub right: &'a DVector<f64>,
    pub mass: f64,
    /// RK4 steps; must be even for Simpson quadrature.
    pub steps: usize,
    pub form: BvpForm,
}

impl<'a> LinearBVP<'a> {
    pub fn new(
        potential: &'a dyn VectorPotential,
        shift: &'a DVector<f64>,
        horizon: f64,
        left: &'a DVector<f64>,
        right: &'a DVector<f64>,
        mass: f64,
    ) -> Self {
        Self { potential, shift, horizon, left, right, mass, steps: DEFAULT_STEPS, form: BvpForm::Reconciled }
    }

    pub fn with_steps(self, steps: usize) -> Self {
        Self { steps, ..self }
    }

    pub fn with_form(self, form: BvpForm) -> Self {
        Self { form, ..self }
    }

    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn validate(&self) -> Result<(), FrameworkError> {
        let n = self.dim();
        for v in [self.shift, self.left, self.right] {
            if v.len() != n {
                return Err(FrameworkError::Dimension { expected: n, got: v.len() });
            }
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(FrameworkError::Invalid("horizon must be positive"));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(FrameworkError::Invalid("mass must be positive"));
        }
        if self.steps < 2 || !self.steps.is_multiple_of(2) {
            return Err(FrameworkError::Invalid("steps must be even and at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BVPSolution {
    pub nodes: Vec<f64>,
    pub values: Vec<DVector<f64>>,
    pub derivative_values: Vec<DVector<f64>>,
}

/// Hessian and gradient of `V` at the shift, sampled at every half step.
struct Coefficients {
    hess: Vec<DMatrix<f64>>,
    grad: Vec<DVector<f64>>,
    h: f64,
}

impl Coefficients {
    fn new(bvp: &LinearBVP) -> Self {
        let h = bvp.horizon / bvp.steps as f64;
        let (hess, grad) = (0..=2 * bvp.steps)
            .map(|j| {
                let tau = 0.5 * h * j as f64;
                (bvp.potential.hessian(bvp.shift, tau), bvp.potential.gradient(bvp.shift, tau))
            })
            .unzip();
        Self { hess, grad, h }
    }

    /// `(u, v) ↦ (v, a)` at half-step index `j`.
    fn accel(&self, bvp: &LinearBVP, j: usize, u: &DVector<f64>, forced: bool) -> DVector<f64> {
        let mut rhs = &self.hess[j] * u;
        if forced {
            rhs += &self.grad[j];
        }
        match bvp.form {
            BvpForm::Reconciled => rhs / -bvp.mass,
            BvpForm::Literal => rhs,
        }
    }

    fn integrate(&self, bvp: &LinearBVP, u0: DVector<f64>, v0: DVector<f64>, forced: bool) -> Track {
        let h = self.h;
        let mut us = Vec::with_capacity(bvp.steps + 1);
        let mut vs = Vec::with_capacity(bvp.steps + 1);
        let (mut u, mut v) = (u0, v0);
        us.push(u.clone());
        vs.push(v.clone());
        for n in 0..bvp.steps {
            let j = 2 * n;
            let k1u = v.clone();
            let k1v = self.accel(bvp, j, &u, forced);
            let k2u = &v + &k1v * (0.5 * h);
            let k2v = self.accel(bvp, j + 1, &(&u + &k1u * (0.5 * h)), forced);
            let k3u = &v + &k2v * (0.5 * h);
            let k3v = self.accel(bvp, j + 1, &(&u + &k2u * (0.5 * h)), forced);
            let k4u = &v + &k3v * h;
            let k4v = self.accel(bvp, j + 2, &(&u + &k3u * h), forced);
            u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
            us.push(u.clone());
            vs.push(v.clone());
        }
        (us, vs)
    }
}

/// Positions and velocities at every step.
type Track = (Vec<DVector<f64>>, Vec<DVector<f64>>);

/// Fundamental solutions for fixed shift and horizon: the forced solution
/// from rest at the origin, and unit position and velocity starts. Any
/// endpoint pair is a linear combination of these.
struct Shooting {
    coeffs: Coefficients,
    steps: usize,
    forced: Track,
    from_position: Vec<Track>,
    from_velocity: Vec<Track>,
    matrix: DMatrix<f64>,
    det: f64,
}

fn shoot(bvp: &LinearBVP) -> Result<Shooting, FrameworkError> {
    bvp.validate()?;
    let n = bvp.dim();
    let coeffs = Coefficients::new(bvp);
    let forced = coeffs.integrate(bvp, DVector::zeros(n), DVector::zeros(n), true);
    let unit = |i: usize| {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        e
    };
    let from_position: Vec<_> = (0..n).map(|i| coeffs.integrate(bvp, unit(i), DVector::zeros(n), false)).collect();
    let from_velocity: Vec<_> = (0..n).map(|i| coeffs.integrate(bvp, DVector::zeros(n), unit(i), false)).collect();
    let mut matrix = DMatrix::zeros(n, n);
    for (i, (us, _)) in from_velocity.iter().enumerate() {
        matrix.set_column(i, &us[bvp.steps]);
    }
    let det = matrix.determinant();
    Ok(Shooting { coeffs, steps: bvp.steps, forced, from_position, from_velocity, matrix, det })
}

impl Shooting {
    fn solution(
        &self,
        bvp: &LinearBVP,
        left: &DVector<f64>,
        right: &DVector<f64>,
    ) -> Result<BVPSolution, FrameworkError> {
        let n = left.len();
        if !(self.det.abs() / bvp.horizon.powi(n as i32) >= CONJUGATE_TOL) {
            return Err(FrameworkError::ConjugatePoint { det: self.det });
        }
        let mut values = self.forced.0.clone();
        let mut derivative_values = self.forced.1.clone();
        let add = |values: &mut Vec<DVector<f64>>, derivs: &mut Vec<DVector<f64>>, w: f64, (us, vs): &Track| {
            for k in 0..=self.steps {
                values[k].axpy(w, &us[k], 1.0);
                derivs[k].axpy(w, &vs[k], 1.0);
            }
        };
        for (w, basis) in left.iter().zip(&self.from_position) {
            add(&mut values, &mut derivative_values, *w, basis);
        }
        let target = right - &values[self.steps];
        let weights =
            self.matrix.clone().lu().solve(&target).ok_or(FrameworkError::ConjugatePoint { det: self.det })?;
        for (w, basis) in weights.iter().zip(&self.from_velocity) {
            add(&mut values, &mut derivative_values, *w, basis);
        }
        let nodes = (0..=self.steps).map(|k| k as f64 * self.coeffs.h).collect();
        Ok(BVPSolution { nodes, values, derivative_values })
    }

    /// Simpson quadrature of `(m/2)|u̇|² − [V'·u + ½ uᵀ H u]` along the solution.
    fn action(&self, bvp: &LinearBVP, left: &DVector<f64>, right: &DVector<f64>) -> Result<f64, FrameworkError> {
        let sol = self.solution(bvp, left, right)?;
        let lagrangian = |k: usize| {
            let (u, v) = (&sol.values[k], &sol.derivative_values[k]);
            let (hess, grad) = (&self.coeffs.hess[2 * k], &self.coeffs.grad[2 * k]);
            0.5 * bvp.mass * v.dot(v) - (grad.dot(u) + 0.5 * u.dot(&(hess * u)))
        };
        let sum: f64 = (0..=self.steps)
            .map(|k| {
                let w = if k == 0 || k == self.steps {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * lagrangian(k)
            })
            .sum();
        Ok(sum * self.coeffs.h / 3.0)
    }
}

/// Determinant of the map from initial velocity to `u(T)`; `sin(ϖT)/ϖ` in
/// the one-dimensional harmonic case.
pub fn shooting_determinant(bvp: &LinearBVP) -> Result<f64, FrameworkError> {
    Ok(shoot(bvp)?.det)
}

/// Linear shooting for the boundary problem.
pub fn solve_bvp(bvp: &LinearBVP) -> Result<BVPSolution, FrameworkError> {
    shoot(bvp)?.solution(bvp, bvp.left, bvp.right)
}

pub fn master_action_numeric(bvp: &LinearBVP) -> Result<f64, FrameworkError> {
    shoot(bvp)?.action(bvp, bvp.left, bvp.right)
}

/// Central-difference gradient and Hessian of `S` in the left endpoint.
fn left_derivatives(
    s: &Shooting,
    bvp: &LinearBVP,
    y: &DVector<f64>,
    right: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>), FrameworkError> {
    let n = y.len();
    let step = |i: usize| 1e-3 * (1.0 + y[i].abs());
    let action = |pairs: &[(usize, f64)]| {
        let mut z = y.clone();
        for &(i, d) in pairs {
            z[i] += d;
        }
        s.action(bvp, &z, right)
    };
    let s0 = action(&[])?;
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let hi = step(i);
        let sp = action(&[(i, hi)])?;
        let sm = action(&[(i, -hi)])?;
        grad[i] = (sp - sm) / (2.0 * hi);
        hess[(i, i)] = (sp - 2.0 * s0 + sm) / (hi * hi);
        for j in 0..i {
            let hj = step(j);
            let spp = action(&[(i, hi), (j, hj)])?;
            let spm = action(&[(i, hi), (j, -hj)])?;
            let smp = action(&[(i, -hi), (j, hj)])?;
            let smm = action(&[(i, -hi), (j, -hj)])?;
            let v = (spp - spm - smp + smm) / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok((grad, hess))
}

fn critical_left_from(
    s: &Shooting,
    bvp: &LinearBVP,
    start: &DVector<f64>,
    right: &DVector<f64>,
) -> Result<DVector<f64>, FrameworkError> {
    let mut y = start.clone();
    let (mut grad, mut hess) = left_derivatives(s, bvp, &y, right)?;
    for iter in 0..NEWTON_MAX_ITER {
        let gnorm = grad.norm();
        if gnorm <= 1e-10 * hess.norm().max(1.0) {
            return Ok(y);
        }
        let delta = hess
            .clone()
            .lu()
            .solve(&(-&grad))
            .ok_or(FrameworkError::NoConvergence { residual: gnorm, iterations: iter })?;
        // the gradient is finite-difference noise once steps are this small
        if delta.norm() <= STEP_TOL * (1.0 + y.norm()) {
            return Ok(y + delta);
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = &y + &delta * alpha;
            let (g, h) = left_derivatives(s, bvp, &trial, right)?;
            if g.norm() < gnorm {
                y = trial;
                grad = g;
                hess = h;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(FrameworkError::NoConvergence { residual: gnorm, iterations: iter });
        }
    }
    Err(FrameworkError::NoConvergence { residual: grad.norm(), iterations: NEWTON_MAX_ITER })
}

/// Left endpoint `y` with `∂S/∂y = 0` for the given right endpoint, by
/// damped Newton starting from `bvp.left`.
pub fn critical_left(bvp: &LinearBVP) -> Result<DVector<f64>, FrameworkError> {
    let s = shoot(bvp)?;
    critical_left_from(&s, bvp, bvp.left, bvp.right)
}

/// Right endpoint `x_cr` solving `y_cr(x_cr) + λ − x₀ = 0`, by Newton with a
/// finite-difference Jacobian starting from `bvp.right`.
pub fn critical_center(bvp: &LinearBVP, x0: &DVector<f64>) -> Result<DVector<f64>, FrameworkError> {
    bvp.validate()?;
    let n = bvp.dim();
    if x0.len() != n {
        return Err(FrameworkError::Dimension { expected: n, got: x0.len() });
    }
    let s = shoot(bvp)?;
    let residual = |x: &DVector<f64>, guess: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>), FrameworkError> {
        let y = critical_left_from(&s, bvp, guess, x)?;
        Ok((&y + bvp.shift - x0, y))
    };
    let scale = 1.0 + x0.amax() + bvp.shift.amax();
    let mut x = bvp.right.clone();
    let (mut r, mut y) = residual(&x, bvp.left)?;
    for iter in 0..NEWTON_MAX_ITER {
        if r.norm() <= 1e-8 * scale {
            return Ok(x);
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-4 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let (rp, _) = residual(&xp, &y)?;
            let (rm, _) = residual(&xm, &y)?;
            jac.set_column(j, &((rp - rm) / (2.0 * h)));
        }
        let delta =
            jac.lu().solve(&(-&r)).ok_or(FrameworkError::NoConvergence { residual: r.norm(), iterations: iter })?;
        x += &delta;
        (r, y) = residual(&x, &y)?;
        if delta.norm() <= STEP_TOL * (1.0 + x.norm()) {
            return Ok(x);
        }
    }
    Err(FrameworkError::NoConvergence { residual: r.norm(), iterations: NEWTON_MAX_ITER })
}
