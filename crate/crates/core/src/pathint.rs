//! Time-discretized path integrals for `ẋ = F(x, t)`.
//!
//! The discrete action of a path `x₀ … x_N` on a uniform grid is
//!
//! ```text
//! S_N = Σ_{n<N} (Δt/4) r_n²,     r_n = (x_{n+1} − x_n)/Δt − F(x_n, t_n).
//! ```
//!
//! Scaled by `2Δt`, its Hessian over the interior nodes is tridiagonal with
//! diagonal `1 + (1 + ΔtF'_k)² − Δt² r_k F''_k` and off-diagonal
//! `−(1 + ΔtF'_k)`, which gives the three-term prefactor recursion.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::PolynomialPotential;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PathError {
    #[error("need at least {need} steps, got {got}")]
    TooFewSteps { need: usize, got: usize },
    #[error("Newton iteration did not converge (gradient {gradient:e} after {iterations} iterations)")]
    NoConvergence { gradient: f64, iterations: usize },
    #[error("prefactor recursion crosses zero at n = {index}")]
    SingularHessian { index: usize },
    #[error("invalid argument: {0}")]
    Invalid(&'static str),
}

/// `F(x, t) = Σ_k p_k x^k + A sin(Ω t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    coeffs: Vec<f64>,
    drive_amp: f64,
    drive_freq: f64,
}

impl FlowField {
    pub fn new(coeffs: Vec<f64>, drive_amp: f64, drive_freq: f64) -> Self {
        Self { coeffs, drive_amp, drive_freq }
    }

    pub fn free() -> Self {
        Self::new(Vec::new(), 0.0, 0.0)
    }

    /// `F(x) = c − κ x`.
    pub fn linear(offset: f64, kappa: f64) -> Self {
        Self::new(vec![offset, -kappa], 0.0, 0.0)
    }

    /// Gradient flow `F = −∂V/∂x` including the drive.
    pub fn from_potential(pot: &PolynomialPotential) -> Self {
        let v = pot.static_poly();
        let coeffs = v.iter().enumerate().skip(1).map(|(k, &c)| -(k as f64) * c).collect();
        Self::new(coeffs, pot.drive_amp(), pot.drive_freq())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `(p(x), p'(x), p''(x))` of the static polynomial by Horner's scheme.
    fn poly(&self, x: f64) -> (f64, f64, f64) {
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            ddp = ddp * x + 2.0 * dp;
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp, ddp)
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.poly(x).0 + self.drive_amp * (self.drive_freq * t).sin()
    }

    /// `∂F/∂x`
    pub fn dx(&self, x: f64, _t: f64) -> f64 {
        self.poly(x).1
    }

    /// `∂²F/∂x²`
    pub fn dxx(&self, x: f64, _t: f64) -> f64 {
        self.poly(x).2
    }

    /// `∂F/∂t`
    pub fn dt(&self, _x: f64, t: f64) -> f64 {
        self.drive_amp * self.drive_freq * (self.drive_freq * t).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub step: f64,
    pub start_time: f64,
    /// `x₀ … x_N`
    pub nodes: Vec<f64>,
}

impl DiscretePath {
    pub fn new(step: f64, start_time: f64, nodes: Vec<f64>) -> Result<Self, PathError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(PathError::Invalid("step must be positive"));
        }
        if nodes.len() < 2 {
            return Err(PathError::TooFewSteps { need: 1, got: nodes.len().saturating_sub(1) });
        }
        Ok(Self { step, start_time, nodes })
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn time(&self, n: usize) -> f64 {
        self.start_time + n as f64 * self.step
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.steps()]
    }
}

/// `r_n` for `n = 0 … N−1`.
pub fn residuals(field: &FlowField, path: &DiscretePath) -> Vec<f64> {
    let dt = path.step;
    path.nodes.windows(2).enumerate().map(|(n, w)| (w[1] - w[0]) / dt - field.value(w[0], path.time(n))).collect()
}

pub fn discrete_action(field: &FlowField, path: &DiscretePath) -> f64 {
    let q = 0.25 * path.step;
    residuals(field, path).iter().map(|r| q * r * r).sum()
}

/// `∂S_N/∂x_k` for the interior nodes `k = 1 … N−1`.
pub fn action_gradient(field: &FlowField, path: &DiscretePath) -> Vec<f64> {
    let r = residuals(field, path);
    let dt = path.step;
    (1..path.steps())
        .map(|k| {
            let fk = field.dx(path.nodes[k], path.time(k));
            0.5 * (r[k - 1] - r[k] * (1.0 + dt * fk))
        })
        .collect()
}

/// Diagonal and off-diagonal of `2Δt·H` over the interior nodes.
fn scaled_hessian(field: &FlowField, path: &DiscretePath, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dt = path.step;
    let n = path.steps();
    let mut diag = Vec::with_capacity(n.saturating_sub(1));
    let mut off = Vec::with_capacity(n.saturating_sub(2));
    for k in 1..n {
        let (x, t) = (path.nodes[k], path.time(k));
        let e = 1.0 + dt * field.dx(x, t);
        diag.push(1.0 + e * e - dt * dt * r[k] * field.dxx(x, t));
        if k + 1 < n {
            off.push(-e);
        }
    }
    (diag, off)
}

/// Thomas algorithm for a symmetric tridiagonal system.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let lower = if i > 0 { off[i - 1] } else { 0.0 };
        let denom = diag[i] - lower * if i > 0 { c[i - 1] } else { 0.0 };
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { off[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - lower * if i > 0 { d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

fn rk4(field: &FlowField, x: f64, t: f64, h: f64) -> f64 {
    let k1 = field.value(x, t);
    let k2 = field.value(x + 0.5 * h * k1, t + 0.5 * h);
    let k3 = field.value(x + 0.5 * h * k2, t + 0.5 * h);
    let k4 = field.value(x + h * k3, t + h);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Classical flow `ẋ = F(x, t)` sampled on an `N`-step grid over `[t₀, t₀ + T]`.
pub fn critical_path_free(
    field: &FlowField,
    x0: f64,
    t0: f64,
    horizon: f64,
    steps: usize,
) -> Result<DiscretePath, PathError> {
    if steps < 1 {
        return Err(PathError::TooFewSteps { need: 1, got: steps });
    }
    const SUBSTEPS: usize = 8;
    let dt = horizon / steps as f64;
    let h = dt / SUBSTEPS as f64;
    let mut nodes = Vec::with_capacity(steps + 1);
    let mut x = x0;
    nodes.push(x);
    for n in 0..steps {
        let tn = t0 + n as f64 * dt;
        for j in 0..SUBSTEPS {
            x = rk4(field, x, tn + j as f64 * h, h);
        }
        nodes.push(x);
    }
    DiscretePath::new(dt, t0, nodes)
}

const NEWTON_MAX_ITER: usize = 100;

/// Stationary path of `S_N` with both ends pinned, by damped Newton on the
/// interior gradient.
pub fn critical_path_pinned(
    field: &FlowField,
    x0: f64,
    xf: f64,
    t0: f64,
    horizon: f64,
    steps: usize,
) -> Result<DiscretePath, PathError> {
    if steps < 2 {
        return Err(PathError::TooFewSteps { need: 2, got: steps });
    }
    let dt = horizon / steps as f64;
    let nodes = (0..=steps).map(|n| x0 + (xf - x0) * n as f64 / steps as f64).collect();
    let mut path = DiscretePath::new(dt, t0, nodes)?;
    let norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut grad = action_gradient(field, &path);
    for iter in 0..NEWTON_MAX_ITER {
        let scale =
            1.0 + path.nodes.iter().fold(0.0f64, |m, &x| m.max(field.value(x, 0.0).abs())) + (xf - x0).abs() / horizon;
        let gnorm = norm(&grad);
        if gnorm <= 1e-12 * scale {
            return Ok(path);
        }
        let r = residuals(field, &path);
        let (diag, off) = scaled_hessian(field, &path, &r);
        let rhs: Vec<f64> = grad.iter().map(|g| -2.0 * dt * g).collect();
        let delta = solve_tridiagonal(&diag, &off, &rhs)
            .ok_or(PathError::NoConvergence { gradient: gnorm, iterations: iter })?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = path.clone();
            for (x, d) in trial.nodes[1..steps].iter_mut().zip(&delta) {
                *x += alpha * d;
            }
            let g = action_gradient(field, &trial);
            if norm(&g) < gnorm || alpha < 1e-6 {
                path = trial;
                grad = g;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(PathError::NoConvergence { gradient: gnorm, iterations: iter });
        }
    }
    Err(PathError::NoConvergence { gradient: norm(&grad), iterations: NEWTON_MAX_ITER })
}

/// `p_n = r_n/2` and `Φ = Σ p_n² Δt`.
pub fn momentum_and_weight(field: &FlowField, path: &DiscretePath) -> (Vec<f64>, f64) {
    let p: Vec<f64> = residuals(field, path).iter().map(|r| 0.5 * r).collect();
    let phi = p.iter().map(|p| p * p * path.step).sum();
    (p, phi)
}

/// `Q_0 … Q_N` with `Q_0 = 0`, `Q_1 = Δt` and `Q_N = Δt·det(2Δt·H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorState {
    pub q: Vec<f64>,
}

impl PrefactorState {
    pub fn last(&self) -> f64 {
        *self.q.last().expect("non-empty recursion")
    }
}

pub fn prefactor_recursion(field: &FlowField, path: &DiscretePath) -> Result<PrefactorState, PathError> {
    let n_steps = path.steps();
    let dt = path.step;
    let r = residuals(field, path);
    let mut q = Vec::with_capacity(n_steps + 1);
    q.push(0.0);
    q.push(dt);
    for n in 1..n_steps {
        let (x, t) = (path.nodes[n], path.time(n));
        let e = 1.0 + dt * field.dx(x, t);
        let a = 1.0 + e * e - dt * dt * r[n] * field.dxx(x, t);
        let e_prev = 1.0 + dt * field.dx(path.nodes[n - 1], path.time(n - 1));
        let next = a * q[n] - e_prev * e_prev * q[n - 1];
        if next == 0.0 || next.signum() != q[n].signum() || !next.is_finite() {
            return Err(PathError::SingularHessian { index: n + 1 });
        }
        q.push(next);
    }
    Ok(PrefactorState { q })
}

/// Second-difference defect `max_k |(x_{k+1} − 2x_k + x_{k−1})/Δt² − (Ḟ + F F')|`
/// over the interior nodes.
pub fn continuum_defect(field: &FlowField, path: &DiscretePath) -> f64 {
    let dt = path.step;
    (1..path.steps())
        .map(|k| {
            let (x, t) = (path.nodes[k], path.time(k));
            let d2 = (path.nodes[k + 1] - 2.0 * x + path.nodes[k - 1]) / (dt * dt);
            (d2 - field.dt(x, t) - field.value(x, t) * field.dx(x, t)).abs()
        })
        .fold(0.0, f64::max)
}

/// One stationary-phase contribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub path: DiscretePath,
    pub action: f64,
    pub prefactor: f64,
    pub contribution: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSum {
    pub value: Complex64,
    pub points: Vec<CriticalPoint>,
}

/// Stationary-phase evaluation of `Σ_k x_{N,k}² e^{iS_N/ε}/sqrt(4πε Q_{N,k})`
/// over the critical points of `S_N` with free endpoint, located by
/// multi-start Newton on the endpoint.
pub fn saddle_point_average(
    field: &FlowField,
    x0: f64,
    t0: f64,
    horizon: f64,
    steps: usize,
    eps: f64,
) -> Result<SaddleSum, PathError> {
    if !(eps > 0.0) {
        return Err(PathError::Invalid("ε must be positive"));
    }
    let guess = critical_path_free(field, x0, t0, horizon, steps)?.end();
    let spread = 1.0 + guess.abs() + x0.abs();
    let starts: Vec<f64> = (-4..=4).map(|j| guess + 0.25 * spread * j as f64).collect();
    let found: Vec<Option<f64>> =
        starts.par_iter().map(|&s| endpoint_newton(field, x0, s, t0, horizon, steps)).collect();

    let mut endpoints: Vec<f64> = Vec::new();
    for xf in found.into_iter().flatten() {
        if !endpoints.iter().any(|&e| (e - xf).abs() <= 1e-8 * (1.0 + xf.abs())) {
            endpoints.push(xf);
        }
    }
    endpoints.sort_by(f64::total_cmp);

    let mut points = Vec::with_capacity(endpoints.len());
    let mut value = Complex64::default();
    for xf in endpoints {
        let path = critical_path_pinned(field, x0, xf, t0, horizon, steps)?;
        let action = discrete_action(field, &path);
        let prefactor = prefactor_recursion(field, &path)?.last();
        let amp = Complex64::new(4.0 * std::f64::consts::PI * eps * prefactor, 0.0).sqrt();
        let contribution = xf * xf * Complex64::from_polar(1.0, action / eps) / amp;
        value += contribution;
        points.push(CriticalPoint { path, action, prefactor, contribution });
    }
    Ok(SaddleSum { value, points })
}

/// Newton on `∂S_N/∂x_N = r_{N−1}/2` along the pinned critical family.
fn endpoint_newton(field: &FlowField, x0: f64, start: f64, t0: f64, horizon: f64, steps: usize) -> Option<f64> {
    let slope = |xf: f64| -> Option<f64> {
        let path = critical_path_pinned(field, x0, xf, t0, horizon, steps).ok()?;
        Some(0.5 * *residuals(field, &path).last()?)
    };
    let mut xf = start;
    for _ in 0..60 {
        let g = slope(xf)?;
        let h = 1e-6 * (1.0 + xf.abs());
        let dg = (slope(xf + h)? - slope(xf - h)?) / (2.0 * h);
        if dg == 0.0 || !dg.is_finite() {
            return None;
        }
        let step = g / dg;
        xf -= step;
        if step.abs() <= 1e-12 * (1.0 + xf.abs()) {
            return slope(xf).filter(|g| g.abs() < 1e-9).map(|_| xf);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dense_prefactor, discrete_action_hessian};
    use proptest::prelude::*;

    fn path(dt: f64, nodes: Vec<f64>) -> DiscretePath {
        DiscretePath::new(dt, 0.0, nodes).unwrap()
    }

    #[test]
    fn field_derivatives_match_finite_differences() {
        let f = FlowField::new(vec![0.3, -1.2, 0.5, -0.2], 0.7, 2.0);
        let (x, t, h) = (0.8, 0.4, 1e-5);
        let fd_x = (f.value(x + h, t) - f.value(x - h, t)) / (2.0 * h);
        let fd_xx = (f.dx(x + h, t) - f.dx(x - h, t)) / (2.0 * h);
        let fd_t = (f.value(x, t + h) - f.value(x, t - h)) / (2.0 * h);
        assert!((fd_x - f.dx(x, t)).abs() < 1e-6 * fd_x.abs().max(1.0));
        assert!((fd_xx - f.dxx(x, t)).abs() < 1e-6 * fd_xx.abs().max(1.0));
        assert!((fd_t - f.dt(x, t)).abs() < 1e-6 * fd_t.abs().max(1.0));
    }

    #[test]
    fn field_from_potential_is_minus_gradient() {
        let pot = PolynomialPotential::cubic(2.0, 1.5, 0.4, 0.7, 1.1, 3.0).unwrap();
        let f = FlowField::from_potential(&pot);
        for &(x, t) in &[(0.3, 0.1), (-1.2, 2.0)] {
            assert!((f.value(x, t) + pot.eval_gradient(x, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn action_of_forward_flow_vanishes() {
        let f = FlowField::new(vec![0.1, -0.5, 0.2], 0.3, 1.0);
        let dt = 0.1;
        let mut nodes = vec![0.4];
        for n in 0..10 {
            let x = nodes[n];
            nodes.push(x + dt * f.value(x, n as f64 * dt));
        }
        assert!(discrete_action(&f, &path(dt, nodes)).abs() < 1e-28);
    }

    #[test]
    fn free_straight_path_action() {
        let (dt, v, n) = (0.05, 1.7, 20);
        let p = path(dt, (0..=n).map(|i| i as f64 * dt * v).collect());
        let expect = n as f64 * dt / 4.0 * v * v;
        assert!((discrete_action(&FlowField::free(), &p) - expect).abs() < 1e-13);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = FlowField::new(vec![0.2, -0.9, 0.4, -0.1], 0.5, 2.5);
        let p = path(0.1, vec![0.0, 0.3, 0.1, -0.2, 0.5, 0.4]);
        let g = action_gradient(&f, &p);
        let h = 1e-6;
        for k in 1..5 {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.nodes[k] += h;
            minus.nodes[k] -= h;
            let fd = (discrete_action(&f, &plus) - discrete_action(&f, &minus)) / (2.0 * h);
            assert!((fd - g[k - 1]).abs() < 1e-7, "k = {k}");
        }
    }

    #[test]
    fn free_flow_relaxes_exponentially() {
        let p = critical_path_free(&FlowField::linear(0.0, 1.0), 1.0, 0.0, 1.0, 50).unwrap();
        assert!((p.end() - (-1.0f64).exp()).abs() < 1e-6);
        let still = critical_path_free(&FlowField::free(), 0.7, 0.0, 2.0, 10).unwrap();
        assert!(still.nodes.iter().all(|&x| x == 0.7));
        let coarse = discrete_action(
            &FlowField::linear(0.0, 1.0),
            &critical_path_free(&FlowField::linear(0.0, 1.0), 1.0, 0.0, 1.0, 20).unwrap(),
        );
        let fine = discrete_action(
            &FlowField::linear(0.0, 1.0),
            &critical_path_free(&FlowField::linear(0.0, 1.0), 1.0, 0.0, 1.0, 40).unwrap(),
        );
        assert!((coarse / fine - 4.0).abs() < 0.4, "{}", coarse / fine);
    }

    #[test]
    fn driven_flow_settles_on_periodic_orbit() {
        // F = −V' + A sin Ωt with V = x²/2 + 0.1x³
        let f = FlowField::new(vec![0.0, -1.0, -0.3], 0.5, 2.0 * std::f64::consts::PI);
        let per_period = 40;
        let periods = 12;
        let p = critical_path_free(&f, 1.0, 0.0, periods as f64, per_period * periods).unwrap();
        let gaps: Vec<f64> = (0..periods - 1)
            .map(|k| {
                (0..per_period)
                    .map(|j| {
                        let n = k * per_period + j;
                        (p.nodes[n + per_period] - p.nodes[n]).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(*gaps.last().unwrap() < 1e-4);
    }

    #[test]
    fn pinned_paths_for_constant_fields_are_straight() {
        for f in [FlowField::free(), FlowField::new(vec![0.8], 0.0, 0.0)] {
            let p = critical_path_pinned(&f, 0.2, 1.4, 0.0, 1.0, 16).unwrap();
            for (n, x) in p.nodes.iter().enumerate() {
                assert!((x - (0.2 + 1.2 * n as f64 / 16.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pinned_linear_path_approaches_hyperbolic_bvp() {
        // ẍ = κ² x, x(0) = 1, x(1) = 0.5
        let kappa: f64 = 1.3;
        let exact = |t: f64| ((kappa * (1.0 - t)).sinh() + 0.5 * (kappa * t).sinh()) / kappa.sinh();
        let err = |n: usize| {
            let p = critical_path_pinned(&FlowField::linear(0.0, kappa), 1.0, 0.5, 0.0, 1.0, n).unwrap();
            (0..=n).map(|k| (p.nodes[k] - exact(p.time(k))).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e2 < e1 && e1 < 0.02, "{e1} {e2}");
    }

    #[test]
    fn pinned_defect_is_first_order() {
        // The forward-difference action gives a local defect (Δt/2)(F̈ + F'ẍ):
        // halving Δt halves it.
        let f = FlowField::linear(0.0, 1.0);
        let defect = |n| continuum_defect(&f, &critical_path_pinned(&f, 1.0, 0.2, 0.0, 1.0, n).unwrap());
        let ratio = defect(64) / defect(128);
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn pinned_gradient_is_converged() {
        let f = FlowField::new(vec![0.1, -0.8, 0.3, -0.2], 0.4, 3.0);
        let p = critical_path_pinned(&f, 0.5, -0.3, 0.0, 1.5, 48).unwrap();
        let g = action_gradient(&f, &p);
        assert!(g.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn momentum_identities() {
        let f = FlowField::free();
        let (dt, v) = (0.1, 0.6);
        let p = path(dt, (0..=8).map(|i| i as f64 * dt * v).collect());
        let (mom, phi) = momentum_and_weight(&f, &p);
        assert!(mom.iter().all(|m| (m - v / 2.0).abs() < 1e-14));
        assert!((phi - 8.0 * dt * v * v / 4.0).abs() < 1e-14);
        let flow = critical_path_free(&FlowField::linear(0.0, 1.0), 1.0, 0.0, 1.0, 10).unwrap();
        let nodes = {
            let mut x = vec![1.0];
            for _ in 0..10 {
                let last = *x.last().unwrap();
                x.push(last - 0.1 * last);
            }
            x
        };
        let euler = path(0.1, nodes);
        let (mom, phi) = momentum_and_weight(&FlowField::linear(0.0, 1.0), &euler);
        assert!(mom.iter().all(|m| m.abs() < 1e-15) && phi < 1e-30);
        assert!(flow.steps() == 10);
    }

    #[test]
    fn free_prefactor_is_linear() {
        let p = critical_path_pinned(&FlowField::free(), 0.0, 1.0, 0.0, 2.0, 20).unwrap();
        let q = prefactor_recursion(&FlowField::free(), &p).unwrap();
        for (n, qn) in q.q.iter().enumerate() {
            assert!((qn - n as f64 * 0.1).abs() < 1e-13);
        }
    }

    #[test]
    fn prefactor_matches_dense_determinant() {
        let fields = [FlowField::linear(0.0, 0.7), FlowField::new(vec![0.2, -1.1, 0.6, -0.4], 0.5, 2.0)];
        for f in &fields {
            for &n in &[4usize, 16, 32] {
                let p = critical_path_pinned(f, 0.4, -0.1, 0.0, 1.0, n).unwrap();
                let rec = prefactor_recursion(f, &p).unwrap().last();
                let dense = dense_prefactor(&discrete_action_hessian(f, &p), p.step).unwrap();
                assert!((rec - dense).abs() < 1e-10 * dense.abs(), "{rec} vs {dense}");
            }
        }
    }

    #[test]
    fn prefactor_detects_conjugate_point() {
        // F = 20x², node 1 at the origin with residual 1/Δt: 2ΔtH₁₁ = 2 − 2·20·Δt < 0
        let f = FlowField::new(vec![0.0, 0.0, 20.0], 0.0, 0.0);
        let p = path(0.1, vec![-1.0, 0.0, 1.0]);
        assert!(matches!(prefactor_recursion(&f, &p), Err(PathError::SingularHessian { index: 2 })));
    }

    #[test]
    fn saddle_sum_free_particle() {
        let (x0, t, eps) = (0.8, 1.5, 0.3);
        let s = saddle_point_average(&FlowField::free(), x0, 0.0, t, 12, eps).unwrap();
        assert_eq!(s.points.len(), 1);
        let expect = x0 * x0 / (4.0 * std::f64::consts::PI * eps * t).sqrt();
        assert!((s.value - Complex64::new(expect, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn saddle_sum_has_single_critical_point() {
        // full stationarity forces every residual to zero: the only critical
        // path is the forward-difference flow
        let f = FlowField::new(vec![0.0, 1.0, 0.0, -1.0], 0.0, 0.0);
        let s = saddle_point_average(&f, 0.3, 0.0, 1.0, 16, 0.2).unwrap();
        assert_eq!(s.points.len(), 1);
        assert!(s.points[0].action < 1e-20);
        let mut x = 0.3;
        for _ in 0..16 {
            x += 1.0 / 16.0 * f.value(x, 0.0);
        }
        assert!((s.points[0].path.end() - x).abs() < 1e-9);
    }

    #[test]
    fn odd_field_reflection_symmetry() {
        let f = FlowField::new(vec![0.0, 1.0, 0.0, -1.0], 0.0, 0.0);
        let a = critical_path_pinned(&f, 0.0, 0.7, 0.0, 1.0, 24).unwrap();
        let b = critical_path_pinned(&f, 0.0, -0.7, 0.0, 1.0, 24).unwrap();
        let (sa, sb) = (discrete_action(&f, &a), discrete_action(&f, &b));
        let (qa, qb) = (prefactor_recursion(&f, &a).unwrap().last(), prefactor_recursion(&f, &b).unwrap().last());
        assert!((sa - sb).abs() < 1e-13 * sa.max(1.0));
        assert!((qa - qb).abs() < 1e-12 * qa.abs());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn weight_equals_action(nodes in proptest::collection::vec(-2.0f64..2.0, 2..40), dt in 0.01f64..0.3) {
            let f = FlowField::new(vec![0.3, -0.7, 0.2, -0.1], 0.4, 1.3);
            let p = path(dt, nodes);
            let (_, phi) = momentum_and_weight(&f, &p);
            let s = discrete_action(&f, &p);
            prop_assert!((phi - s).abs() <= 1e-14 * s.max(1.0));
            let reversed: f64 = residuals(&f, &p).iter().rev().map(|r| 0.25 * dt * r * r).sum();
            prop_assert!((reversed - s).abs() <= 1e-14 * s.max(1.0));
        }
    }
}
