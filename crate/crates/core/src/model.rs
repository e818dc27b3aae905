//! Driven polynomial potentials and their local quadratic expansion.
//!
//! The static potential is
//!
//! ```text
//! V(x) = (m ω²/2) x² + Σ_k c_k x^k − b x,      3 ≤ k ≤ 8
//! ```
//!
//! and the sinusoidal drive enters as `−A sin(Ω t) x`. Expanding around a
//! shift `λ` gives a forced harmonic oscillator with effective frequency
//! `ϖ²(λ) = V''(λ)/m` and inhomogeneity `g(λ, t) = −d(λ) + A sin(Ω t)`, where
//! `d(λ) = V'(λ)` is the static gradient.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Highest polynomial degree the solvers accept.
pub const MAX_DEGREE: u32 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("mass must be positive and finite, got {0}")]
    NonPositiveMass(f64),
    #[error("coefficient degree {0} outside 3..={MAX_DEGREE}")]
    BadDegree(u32),
    #[error("non-finite parameter `{0}`")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Static polynomial potential plus a single sinusoidal drive.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPotential {
    mass: f64,
    harmonic_freq: f64,
    coeffs: BTreeMap<u32, f64>,
    linear_bias: f64,
    drive_amp: f64,
    drive_freq: f64,
}

impl PolynomialPotential {
    pub fn new(mass: f64, harmonic_freq: f64) -> Result<Self, ModelError> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(ModelError::NonPositiveMass(mass));
        }
        if !harmonic_freq.is_finite() {
            return Err(ModelError::NonFinite("harmonic_freq"));
        }
        Ok(Self { mass, harmonic_freq, coeffs: BTreeMap::new(), linear_bias: 0.0, drive_amp: 0.0, drive_freq: 0.0 })
    }

    /// Sets the coefficient of `x^degree`. Zero coefficients are dropped.
    pub fn with_coeff(mut self, degree: u32, value: f64) -> Result<Self, ModelError> {
        if !(3..=MAX_DEGREE).contains(&degree) {
            return Err(ModelError::BadDegree(degree));
        }
        if !value.is_finite() {
            return Err(ModelError::NonFinite("coeff"));
        }
        if value == 0.0 {
            self.coeffs.remove(&degree);
        } else {
            self.coeffs.insert(degree, value);
        }
        Ok(self)
    }

    /// Linear bias `b`; the potential carries `−b x`.
    pub fn with_bias(mut self, b: f64) -> Result<Self, ModelError> {
        if !b.is_finite() {
            return Err(ModelError::NonFinite("linear_bias"));
        }
        self.linear_bias = b;
        Ok(self)
    }

    /// Drive `−A sin(Ω t) x`.
    pub fn with_drive(mut self, amp: f64, freq: f64) -> Result<Self, ModelError> {
        if !(amp.is_finite() && freq.is_finite()) {
            return Err(ModelError::NonFinite("drive"));
        }
        self.drive_amp = amp;
        self.drive_freq = freq;
        Ok(self)
    }

    /// `V = mω²x²/2 + a x³ − b x − A sin(Ωt) x`.
    pub fn cubic(m: f64, omega: f64, a: f64, b: f64, amp: f64, freq: f64) -> Result<Self, ModelError> {
        Self::new(m, omega)?.with_coeff(3, a)?.with_bias(b)?.with_drive(amp, freq)
    }

    /// `V = mω²x²/2 − a x⁴ + b x³ − A sin(Ωt) x`.
    pub fn double_well(m: f64, omega: f64, a: f64, b: f64, amp: f64, freq: f64) -> Result<Self, ModelError> {
        Self::new(m, omega)?.with_coeff(4, -a)?.with_coeff(3, b)?.with_drive(amp, freq)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn harmonic_freq(&self) -> f64 {
        self.harmonic_freq
    }

    pub fn coeffs(&self) -> &BTreeMap<u32, f64> {
        &self.coeffs
    }

    pub fn coeff(&self, degree: u32) -> f64 {
        self.coeffs.get(&degree).copied().unwrap_or(0.0)
    }

    pub fn linear_bias(&self) -> f64 {
        self.linear_bias
    }

    pub fn drive_amp(&self) -> f64 {
        self.drive_amp
    }

    pub fn drive_freq(&self) -> f64 {
        self.drive_freq
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().next_back().copied().unwrap_or(2)
    }

    pub fn is_harmonic(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `A sin(Ω t)`.
    pub fn drive(&self, t: f64) -> f64 {
        self.drive_amp * (self.drive_freq * t).sin()
    }

    /// Power-basis coefficients `p[k]` of the static potential, `V(x) = Σ p[k] x^k`.
    pub fn static_poly(&self) -> Vec<f64> {
        let mut p = vec![0.0; (self.degree() as usize).max(2) + 1];
        p[1] = -self.linear_bias;
        p[2] = 0.5 * self.mass * self.harmonic_freq * self.harmonic_freq;
        for (&k, &c) in &self.coeffs {
            p[k as usize] = c;
        }
        p
    }

    pub fn static_value(&self, x: f64) -> f64 {
        horner(&self.static_poly(), x)
    }

    /// Static gradient `V'(x)`, i.e. `d(x)` of the local expansion.
    pub fn static_gradient(&self, x: f64) -> f64 {
        horner(&derivative(&self.static_poly()), x)
    }

    pub fn eval_potential(&self, x: f64, t: f64) -> f64 {
        self.static_value(x) - self.drive(t) * x
    }

    pub fn eval_gradient(&self, x: f64, t: f64) -> f64 {
        self.static_gradient(x) - self.drive(t)
    }

    /// The drive is linear in `x`, so the Hessian is time independent.
    pub fn eval_hessian(&self, x: f64) -> f64 {
        horner(&derivative(&derivative(&self.static_poly())), x)
    }

    /// Coefficients `t[k]` with `V_static(λ + u) = Σ t[k] u^k`.
    pub fn taylor_at(&self, lambda: f64) -> Vec<f64> {
        let mut p = self.static_poly();
        let mut out = Vec::with_capacity(p.len());
        let mut fact = 1.0;
        for k in 0..p.len() {
            if k > 0 {
                fact *= k as f64;
            }
            out.push(horner(&p, lambda) / fact);
            p = derivative(&p);
        }
        out
    }

    /// Embedding as a one-dimensional [`VectorPolynomial`].
    pub fn to_vector(&self) -> VectorPolynomial {
        let mut terms = Vec::new();
        for (k, &c) in self.static_poly().iter().enumerate() {
            if c != 0.0 {
                terms.push(Monomial::new(vec![k as u32], TimeCoefficient::constant(c)));
            }
        }
        if self.drive_amp != 0.0 {
            terms.push(Monomial::new(vec![1], TimeCoefficient::sinusoid(0.0, -self.drive_amp, self.drive_freq)));
        }
        VectorPolynomial::new(1, terms).expect("one-dimensional exponents")
    }
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(p: &[f64]) -> Vec<f64> {
    if p.len() <= 1 {
        return vec![0.0];
    }
    p.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `ϖ² > 0`
    Oscillatory,
    /// `ϖ² < 0`
    Hyperbolic,
    /// `ϖ² ≈ 0`
    Degenerate,
}

/// Forced harmonic oscillator obtained by expanding the potential at `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalQuadraticModel {
    pub shift: f64,
    pub mass: f64,
    pub omega_eff_sq: f64,
    /// `d(λ)`, the static gradient at the shift.
    pub bias: f64,
    pub drive_amp: f64,
    pub drive_freq: f64,
    pub branch: Branch,
}

impl LocalQuadraticModel {
    /// Builds a model directly from its frequency, bias and drive.
    pub fn from_parts(mass: f64, omega_eff_sq: f64, bias: f64, drive_amp: f64, drive_freq: f64) -> Self {
        Self { shift: 0.0, mass, omega_eff_sq, bias, drive_amp, drive_freq, branch: classify(omega_eff_sq, 1.0) }
    }

    /// `g(λ, t) = −d(λ) + A sin(Ω t)`.
    pub fn g(&self, t: f64) -> f64 {
        -self.bias + self.drive_amp * (self.drive_freq * t).sin()
    }

    /// `sqrt(|ϖ²|)`: `ϖ` on the oscillatory branch, `κ` on the hyperbolic one.
    pub fn rate(&self) -> f64 {
        self.omega_eff_sq.abs().sqrt()
    }

    /// Signed effective frequency: `+ϖ` when oscillatory, `−κ` when hyperbolic.
    pub fn omega_eff_signed(&self) -> f64 {
        if self.omega_eff_sq < 0.0 {
            -self.rate()
        } else {
            self.rate()
        }
    }
}

fn classify(omega_eff_sq: f64, omega_sq: f64) -> Branch {
    let tol = 1e-12 * omega_sq.max(1.0);
    if omega_eff_sq.abs() <= tol {
        Branch::Degenerate
    } else if omega_eff_sq > 0.0 {
        Branch::Oscillatory
    } else {
        Branch::Hyperbolic
    }
}

pub fn local_expand(pot: &PolynomialPotential, lambda: f64) -> LocalQuadraticModel {
    let w2 = pot.eval_hessian(lambda) / pot.mass;
    LocalQuadraticModel {
        shift: lambda,
        mass: pot.mass,
        omega_eff_sq: w2,
        bias: pot.static_gradient(lambda),
        drive_amp: pot.drive_amp,
        drive_freq: pot.drive_freq,
        branch: classify(w2, pot.harmonic_freq * pot.harmonic_freq),
    }
}

/// Evaluators of an n-dimensional time-dependent potential and its derivatives.
pub trait VectorPotential: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>, t: f64) -> f64;
    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64>;
}

/// `c + s·sin(Ω t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeCoefficient {
    pub constant: f64,
    pub sin_amp: f64,
    pub sin_freq: f64,
}

impl TimeCoefficient {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, sin_amp: 0.0, sin_freq: 0.0 }
    }

    pub fn sinusoid(constant: f64, sin_amp: f64, sin_freq: f64) -> Self {
        Self { constant, sin_amp, sin_freq }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.constant + self.sin_amp * (self.sin_freq * t).sin()
    }
}

/// `g_α(t) x^α` with multi-index `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: TimeCoefficient,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>, coeff: TimeCoefficient) -> Self {
        Self { exponents, coeff }
    }
}

/// `V(x, t) = Σ_α g_α(t) x^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPolynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl VectorPolynomial {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self, ModelError> {
        for m in &terms {
            if m.exponents.len() != dim {
                return Err(ModelError::Dimension { expected: dim, got: m.exponents.len() });
            }
            if m.exponents.iter().sum::<u32>() > MAX_DEGREE {
                return Err(ModelError::BadDegree(m.exponents.iter().sum()));
            }
        }
        Ok(Self { dim, terms })
    }

    /// Block-diagonal sum of one-dimensional potentials, one per coordinate.
    pub fn decoupled(parts: &[PolynomialPotential]) -> Self {
        let dim = parts.len();
        let mut terms = Vec::new();
        for (i, p) in parts.iter().enumerate() {
            for m in p.to_vector().terms {
                let mut e = vec![0; dim];
                e[i] = m.exponents[0];
                terms.push(Monomial::new(e, m.coeff));
            }
        }
        Self { dim, terms }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }
}

fn pow_u(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl VectorPotential for VectorPolynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|m| m.exponents.iter().zip(x.iter()).fold(m.coeff.at(t), |acc, (&e, &xi)| acc * pow_u(xi, e)))
            .sum()
    }

    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for m in &self.terms {
            let c = m.coeff.at(t);
            for i in 0..self.dim {
                let ei = m.exponents[i];
                if ei == 0 {
                    continue;
                }
                let mut term = c * ei as f64 * pow_u(x[i], ei - 1);
                for j in (0..self.dim).filter(|&j| j != i) {
                    term *= pow_u(x[j], m.exponents[j]);
                }
                g[i] += term;
            }
        }
        g
    }

    fn hessian(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64> {
        let n = self.dim;
        let mut h = DMatrix::zeros(n, n);
        for m in &self.terms {
            let c = m.coeff.at(t);
            for i in 0..n {
                for j in i..n {
                    let mut e = m.exponents.clone();
                    let mut factor = c;
                    for &k in &[i, j] {
                        if e[k] == 0 {
                            factor = 0.0;
                            break;
                        }
                        factor *= e[k] as f64;
                        e[k] -= 1;
                    }
                    if factor == 0.0 {
                        continue;
                    }
                    let val = e.iter().zip(x.iter()).fold(factor, |acc, (&ek, &xk)| acc * pow_u(xk, ek));
                    h[(i, j)] += val;
                    if i != j {
                        h[(j, i)] += val;
                    }
                }
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn expand_harmonic_with_bias() {
        let pot = PolynomialPotential::new(1.0, 3.0).unwrap().with_bias(1.0).unwrap();
        let m = local_expand(&pot, 0.0);
        assert_eq!(m.omega_eff_sq, 9.0);
        assert_eq!(m.bias, -1.0);
        assert_eq!(m.branch, Branch::Oscillatory);
    }

    #[test]
    fn expand_cubic_at_one() {
        let pot = PolynomialPotential::cubic(1.0, 3.0, 3.0, 10.0, 0.0, 0.0).unwrap();
        let m = local_expand(&pot, 1.0);
        assert_relative_eq!(m.omega_eff_sq, 27.0, epsilon = 1e-14);
        assert_relative_eq!(m.bias, 8.0, epsilon = 1e-14);
        // finite-difference Hessian of V
        let h = 1e-4;
        let fd = (pot.static_value(1.0 + h) - 2.0 * pot.static_value(1.0) + pot.static_value(1.0 - h)) / (h * h);
        assert_relative_eq!(fd, 27.0, max_relative = 1e-6);
    }

    #[test]
    fn expand_double_well_at_origin() {
        let pot = PolynomialPotential::double_well(10.0, 10.0, -20.0, 10.0, 10.0, 20.0).unwrap();
        let m = local_expand(&pot, 0.0);
        assert_eq!(m.omega_eff_sq, 100.0);
        assert_eq!(m.bias, 0.0);
        // ϖ² = ω² + 6bλ/m − 12aλ²/m
        let l = 0.3;
        let m = local_expand(&pot, l);
        assert_relative_eq!(
            m.omega_eff_sq,
            100.0 + 6.0 * 10.0 * l / 10.0 + 12.0 * 20.0 * l * l / 10.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn potential_values() {
        let pot = PolynomialPotential::cubic(1.0, 3.0, 3.0, 0.0, 1.0, 3.0).unwrap();
        assert_eq!(pot.eval_potential(0.0, 0.7), 0.0);
        let pot = PolynomialPotential::cubic(1.0, 3.0, 3.0, 10.0, 1.0, 3.0).unwrap();
        assert_relative_eq!(pot.eval_potential(2.0, 0.0), 22.0, epsilon = 1e-12);
        assert_relative_eq!(pot.eval_gradient(2.0, PI / 6.0), 43.0, epsilon = 1e-12);
    }

    #[test]
    fn branch_classification() {
        let pot = PolynomialPotential::cubic(1.0, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        // ϖ² = 1 + 6λ
        assert_eq!(local_expand(&pot, -1.0 / 6.0).branch, Branch::Degenerate);
        assert_eq!(local_expand(&pot, -1.0).branch, Branch::Hyperbolic);
        assert_eq!(local_expand(&pot, 1.0).branch, Branch::Oscillatory);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PolynomialPotential::new(0.0, 1.0).is_err());
        assert!(PolynomialPotential::new(-1.0, 1.0).is_err());
        let p = PolynomialPotential::new(1.0, 1.0).unwrap();
        assert_eq!(p.clone().with_coeff(9, 1.0), Err(ModelError::BadDegree(9)));
        assert_eq!(p.with_coeff(2, 1.0), Err(ModelError::BadDegree(2)));
    }

    fn arb_potential() -> impl Strategy<Value = PolynomialPotential> {
        (0.1f64..10.0, -5.0f64..5.0, prop::collection::vec(-2.0f64..2.0, 6), -3.0f64..3.0, -3.0f64..3.0, 0.0f64..10.0)
            .prop_map(|(m, w, c, b, a, f)| {
                let mut p = PolynomialPotential::new(m, w).unwrap();
                for (i, &ci) in c.iter().enumerate() {
                    p = p.with_coeff(3 + i as u32, ci).unwrap();
                }
                p.with_bias(b).unwrap().with_drive(a, f).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn hessian_matches_expansion_and_finite_differences(pot in arb_potential(), l in -1.5f64..1.5) {
            let model = local_expand(&pot, l);
            prop_assert!((pot.eval_hessian(l) / pot.mass() - model.omega_eff_sq).abs()
                <= 1e-12 * (1.0 + model.omega_eff_sq.abs()));
            let h = 1e-3;
            // fourth-order central stencil
            let d5 = |f: &dyn Fn(f64) -> f64| (f(l - 2.0 * h) - 8.0 * f(l - h) + 8.0 * f(l + h) - f(l + 2.0 * h)) / (12.0 * h);
            let fd = d5(&|x| pot.eval_gradient(x, 0.3));
            let exact = pot.eval_hessian(l);
            prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
            let fdg = d5(&|x| pot.eval_potential(x, 0.3));
            let g = pot.eval_gradient(l, 0.3);
            prop_assert!((fdg - g).abs() <= 1e-6 * (1.0 + g.abs()));
        }

        #[test]
        fn bias_is_the_static_gradient(pot in arb_potential(), l in -1.5f64..1.5, ts in prop::collection::vec(0.0f64..20.0, 10)) {
            let d = local_expand(&pot, l).bias;
            for t in ts {
                let v = pot.eval_gradient(l, t) + pot.drive(t);
                prop_assert!((v - d).abs() <= 1e-12 * (1.0 + d.abs()));
            }
        }

        #[test]
        fn taylor_reconstruction_is_exact(pot in arb_potential(), l in -1.5f64..1.5, u in -1.0f64..1.0) {
            let t = pot.taylor_at(l);
            let model = local_expand(&pot, l);
            prop_assert!((t[1] - model.bias).abs() <= 1e-12 * (1.0 + t[1].abs()));
            prop_assert!((2.0 * t[2] / pot.mass() - model.omega_eff_sq).abs() <= 1e-12 * (1.0 + model.omega_eff_sq.abs()));
            let rebuilt: f64 = t.iter().enumerate().map(|(k, c)| c * u.powi(k as i32)).sum();
            let direct = pot.static_value(l + u);
            prop_assert!((rebuilt - direct).abs() <= 1e-11 * (1.0 + direct.abs()));
        }

        #[test]
        fn vector_embedding_agrees(pot in arb_potential(), x in -1.5f64..1.5, t in 0.0f64..5.0) {
            let v = pot.to_vector();
            let xv = DVector::from_element(1, x);
            prop_assert!((v.value(&xv, t) - pot.eval_potential(x, t)).abs() <= 1e-10 * (1.0 + pot.eval_potential(x, t).abs()));
            prop_assert!((v.gradient(&xv, t)[0] - pot.eval_gradient(x, t)).abs() <= 1e-10 * (1.0 + pot.eval_gradient(x, t).abs()));
            prop_assert!((v.hessian(&xv, t)[(0, 0)] - pot.eval_hessian(x)).abs() <= 1e-10 * (1.0 + pot.eval_hessian(x).abs()));
        }
    }

    #[test]
    fn vector_polynomial_derivatives_match_finite_differences() {
        // V = x² y + 0.5 y³ z − 2 sin(3t) x z + z⁴
        let v = VectorPolynomial::new(
            3,
            vec![
                Monomial::new(vec![2, 1, 0], TimeCoefficient::constant(1.0)),
                Monomial::new(vec![0, 3, 1], TimeCoefficient::constant(0.5)),
                Monomial::new(vec![1, 0, 1], TimeCoefficient::sinusoid(0.0, -2.0, 3.0)),
                Monomial::new(vec![0, 0, 4], TimeCoefficient::constant(1.0)),
            ],
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.7, -0.4, 1.1]);
        let t = 0.37;
        let g = v.gradient(&x, t);
        let hm = v.hessian(&x, t);
        let h = 1e-4;
        for i in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (v.value(&xp, t) - v.value(&xm, t)) / (2.0 * h);
            assert_relative_eq!(fd, g[i], max_relative = 1e-6);
            let fdg = (v.gradient(&xp, t) - v.gradient(&xm, t)) / (2.0 * h);
            for j in 0..3 {
                assert!((fdg[j] - hm[(j, i)]).abs() <= 1e-6 * (1.0 + hm[(j, i)].abs()));
            }
        }
        assert_relative_eq!(hm.clone(), hm.transpose());
    }
}
