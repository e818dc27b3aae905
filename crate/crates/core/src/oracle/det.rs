use nalgebra::DMatrix;

use super::OracleError;
use crate::pathint::{DiscretePath, FlowField};

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut a: DMatrix<f64>) -> Result<f64, OracleError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut det = 1.0;
    for col in 0..n {
        let (pivot, pmax) =
            (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= 1e-14 * scale {
            return Err(OracleError::SingularMatrix { column: col });
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for r in col + 1..n {
            let factor = a[(r, col)] / p;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a[(col, c)];
                a[(r, c)] -= factor * v;
            }
        }
    }
    Ok(det)
}

/// Prefactor quantity `Q_N = Δt · det(2Δt·H)` of the Gaussian fluctuation
/// integral around a pinned critical path, from a dense Hessian.
pub fn dense_prefactor(hessian: &DMatrix<f64>, dt: f64) -> Result<f64, OracleError> {
    if hessian.nrows() == 0 {
        return Ok(dt);
    }
    Ok(dt * determinant(hessian * (2.0 * dt))?)
}

/// Dense Hessian of the discrete action with respect to the interior nodes
/// `x_1 .. x_{N−1}`, assembled as `(Δt/2)(JᵀJ + Σ r_n ∇²r_n)` from the
/// residuals `r_n = (x_{n+1} − x_n)/Δt − F(x_n, t_n)`.
pub fn discrete_action_hessian(field: &FlowField, path: &DiscretePath) -> DMatrix<f64> {
    let n_steps = path.steps();
    let interior = n_steps.saturating_sub(1);
    let dt = path.step;
    let mut jac = DMatrix::zeros(n_steps, interior);
    let mut curvature = DMatrix::zeros(interior, interior);
    for n in 0..n_steps {
        let (xn, tn) = (path.nodes[n], path.time(n));
        let r = (path.nodes[n + 1] - xn) / dt - field.value(xn, tn);
        // ∂r_n/∂x_{n+1}
        if n < interior {
            jac[(n, n)] = 1.0 / dt;
        }
        // ∂r_n/∂x_n and ∂²r_n/∂x_n²
        if n >= 1 {
            jac[(n, n - 1)] = -1.0 / dt - field.dx(xn, tn);
            curvature[(n - 1, n - 1)] = -r * field.dxx(xn, tn);
        }
    }
    (jac.transpose() * &jac + curvature) * (0.5 * dt)
}
