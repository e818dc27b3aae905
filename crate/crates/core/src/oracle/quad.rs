use super::OracleError;

const INITIAL_PANELS: usize = 16;
const MAX_DEPTH: u32 = 48;
const MAX_EVALS: usize = 20_000_000;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first cut into a fixed number of panels so that
/// oscillatory integrands cannot fool the first error estimate.
pub fn quad_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, OracleError> {
    if a == b {
        return Ok(0.0);
    }
    let width = (b - a) / INITIAL_PANELS as f64;
    let mut stack = Vec::with_capacity(64);
    let mut evals = 0usize;
    for i in 0..INITIAL_PANELS {
        let pa = a + i as f64 * width;
        let pb = if i + 1 == INITIAL_PANELS { b } else { pa + width };
        let (fa, fm, fb) = (f(pa), f(0.5 * (pa + pb)), f(pb));
        evals += 3;
        stack.push(Panel {
            a: pa,
            b: pb,
            fa,
            fm,
            fb,
            whole: (pb - pa) / 6.0 * (fa + 4.0 * fm + fb),
            tol: tol / INITIAL_PANELS as f64,
            depth: 0,
        });
    }

    let mut total = 0.0;
    let mut compensation = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let (lm, rm) = (0.5 * (p.a + m), 0.5 * (m + p.b));
        let (flm, frm) = (f(lm), f(rm));
        evals += 2;
        let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol || (p.b - p.a).abs() <= f64::EPSILON * (p.a.abs() + p.b.abs()) {
            // Kahan-summed Richardson-corrected panel
            let y = left + right + delta / 15.0 - compensation;
            let t = total + y;
            compensation = (t - total) - y;
            total = t;
            continue;
        }
        if p.depth >= MAX_DEPTH || evals > MAX_EVALS {
            return Err(OracleError::ToleranceNotMet { a: p.a, b: p.b });
        }
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
    }
    Ok(total)
}

/// Iterated adaptive quadrature of `∫_a^b ∫_a^t f(t, s) ds dt`.
pub fn quad_triangle<F: Fn(f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, OracleError> {
    let inner_tol = tol / (10.0 * (b - a).abs().max(1.0));
    let failed = std::cell::Cell::new(None);
    let outer = quad_adaptive(
        |t| match quad_adaptive(|s| f(t, s), a, t, inner_tol) {
            Ok(v) => v,
            Err(e) => {
                failed.set(Some(e));
                0.0
            }
        },
        a,
        b,
        tol,
    )?;
    match failed.into_inner() {
        Some(e) => Err(e),
        None => Ok(outer),
    }
}
