use crate::model::PolynomialPotential;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

fn accel(pot: &PolynomialPotential, x: f64, t: f64) -> f64 {
    -pot.eval_gradient(x, t) / pot.mass()
}

fn rk4_step(pot: &PolynomialPotential, s: ClassicalState, h: f64) -> ClassicalState {
    let ClassicalState { t, x, v } = s;
    let (k1x, k1v) = (v, accel(pot, x, t));
    let (k2x, k2v) = (v + 0.5 * h * k1v, accel(pot, x + 0.5 * h * k1x, t + 0.5 * h));
    let (k3x, k3v) = (v + 0.5 * h * k2v, accel(pot, x + 0.5 * h * k2x, t + 0.5 * h));
    let (k4x, k4v) = (v + h * k3v, accel(pot, x + h * k3x, t + h));
    ClassicalState {
        t: t + h,
        x: x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v: v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    }
}

/// Classical trajectory `m ẍ = −∂V/∂x` started at `t = 0`, sampled at
/// `times` (non-decreasing, non-negative), with RK4 steps no longer than `max_step`.
pub fn ehrenfest_states(
    pot: &PolynomialPotential,
    x0: f64,
    v0: f64,
    times: &[f64],
    max_step: f64,
) -> Vec<ClassicalState> {
    let mut s = ClassicalState { t: 0.0, x: x0, v: v0 };
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - s.t;
        if span > 0.0 {
            let n = (span / max_step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                s = rk4_step(pot, s, h);
            }
            s.t = target;
        }
        out.push(s);
    }
    out
}

/// Positions of the classical trajectory at `times`, using a step of
/// `2·10⁻³` of the fastest local time scale.
pub fn ehrenfest(pot: &PolynomialPotential, x0: f64, v0: f64, times: &[f64]) -> Vec<f64> {
    let w = (pot.eval_hessian(x0) / pot.mass()).abs().sqrt();
    let scale = w.max(pot.harmonic_freq().abs()).max(pot.drive_freq().abs()).max(1.0);
    ehrenfest_states(pot, x0, v0, times, 2e-3 / scale).into_iter().map(|s| s.x).collect()
}
