//! Autonomous vector fields with analytic Jacobians.
//!
//! [`SystemModel`] is the interface every integrator and analysis in the
//! crate works against. [`Idmde`] is the bundled three-dimensional
//! dark-matter/dark-energy interaction model
//!
//! ```text
//! x1' = x2 x3 - x1
//! x2' = (x3 - p) x1 - x2
//! x3' = 1 - x1 x2
//! ```
//!
//! together with its closed-form equilibria and divergence. [`ZeroField`]
//! and [`LinearDecay`] are small reference models used for verification.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

pub use nalgebra::Complex;

pub type Complex64 = Complex<f64>;

/// A parameterized autonomous vector field `x' = f(x)` with analytic Jacobian.
///
/// Both evaluators must be pure. Matrices are written row-major into a
/// caller-provided buffer of length `dim * dim`.
pub trait SystemModel: Send + Sync {
    fn dim(&self) -> usize;

    fn params(&self) -> &[f64];

    fn field(&self, x: &[f64], out: &mut [f64]);

    fn jacobian(&self, x: &[f64], out: &mut [f64]);

    /// Allocating convenience wrapper around [`SystemModel::field`].
    fn eval_field(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.field(x, &mut out);
        out
    }

    /// Allocating convenience wrapper around [`SystemModel::jacobian`].
    fn eval_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        self.jacobian(x, &mut out);
        DMatrix::from_row_slice(n, n, &out)
    }
}

impl<M: SystemModel + ?Sized> SystemModel for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn params(&self) -> &[f64] {
        (**self).params()
    }

    fn field(&self, x: &[f64], out: &mut [f64]) {
        (**self).field(x, out)
    }

    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        (**self).jacobian(x, out)
    }
}

/// The interaction model between dark matter and dark energy, parameter `p > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Idmde {
    params: [f64; 1],
}

impl Idmde {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid("p", format!("must be positive and finite, got {p}")));
        }
        Ok(Self { params: [p] })
    }

    pub fn p(&self) -> f64 {
        self.params[0]
    }

    pub fn field3(&self, x: [f64; 3]) -> [f64; 3] {
        let p = self.p();
        [
            x[1] * x[2] - x[0],
            (x[2] - p) * x[0] - x[1],
            1.0 - x[0] * x[1],
        ]
    }

    pub fn jacobian3(&self, x: [f64; 3]) -> Matrix3<f64> {
        let p = self.p();
        Matrix3::new(
            -1.0, x[2], x[1], //
            x[2] - p, -1.0, x[0], //
            -x[1], -x[0], 0.0,
        )
    }

    /// Trace of the Jacobian. Structurally `-1 - 1 + 0`, independent of state and `p`.
    pub fn divergence(&self, x: [f64; 3]) -> f64 {
        self.jacobian3(x).trace()
    }

    pub fn equilibria(&self) -> Result<[Equilibrium; 2]> {
        equilibria(self.p())
    }
}

impl SystemModel for Idmde {
    fn dim(&self) -> usize {
        3
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    #[inline]
    fn field(&self, x: &[f64], out: &mut [f64]) {
        let p = self.params[0];
        out[0] = x[1] * x[2] - x[0];
        out[1] = (x[2] - p) * x[0] - x[1];
        out[2] = 1.0 - x[0] * x[1];
    }

    #[inline]
    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        let p = self.params[0];
        out.copy_from_slice(&[
            -1.0,
            x[2],
            x[1],
            x[2] - p,
            -1.0,
            x[0],
            -x[1],
            -x[0],
            0.0,
        ]);
    }
}

/// `f ≡ 0` in any dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroField {
    pub dim: usize,
}

impl SystemModel for ZeroField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn params(&self) -> &[f64] {
        &[]
    }

    fn field(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn jacobian(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Scalar linear relaxation `f(x) = -rate * x`. Its Caputo solution is
/// `x0 * E_q(-rate * t^q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDecay {
    params: [f64; 1],
}

impl LinearDecay {
    pub fn new(rate: f64) -> Self {
        Self { params: [rate] }
    }

    pub fn rate(&self) -> f64 {
        self.params[0]
    }
}

impl SystemModel for LinearDecay {
    fn dim(&self) -> usize {
        1
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn field(&self, x: &[f64], out: &mut [f64]) {
        out[0] = -self.params[0] * x[0];
    }

    fn jacobian(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = -self.params[0];
    }
}

/// An equilibrium with its linearization spectrum.
///
/// Eigenvalues are ordered by real part, then imaginary part, both
/// descending. Arguments use the principal branch `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub location: [f64; 3],
    pub eigenvalues: [Complex64; 3],
    pub arguments: [f64; 3],
}

impl Equilibrium {
    fn at(model: &Idmde, location: [f64; 3]) -> Result<Self> {
        let eigenvalues = spectrum3(&model.jacobian3(location))
            .ok_or(Error::EigenFailure { p: model.p() })?;
        Ok(Self {
            location,
            eigenvalues,
            arguments: eigenvalues.map(principal_arg),
        })
    }
}

/// Both equilibria `X1*`, `X2*` of the model at parameter `p`:
///
/// `(∓(√2/2)√(P+p), ±(√2/4)(p−P)√(P+p), (p+P)/2)` with `P = √(p²+4)`.
pub fn equilibria(p: f64) -> Result<[Equilibrium; 2]> {
    let model = Idmde::new(p)?;
    let big_p = p.hypot(2.0);
    let root = (big_p + p).sqrt();
    let x1 = std::f64::consts::FRAC_1_SQRT_2 * root;
    let x2 = std::f64::consts::SQRT_2 / 4.0 * (p - big_p) * root;
    let x3 = 0.5 * (p + big_p);
    Ok([
        Equilibrium::at(&model, [-x1, x2, x3])?,
        Equilibrium::at(&model, [x1, -x2, x3])?,
    ])
}

/// Numerical spectrum of a real 3×3 matrix, sorted by (re, im) descending.
pub fn spectrum3(m: &Matrix3<f64>) -> Option<[Complex64; 3]> {
    let ev = m.complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2]];
    if out.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return None;
    }
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Some(out)
}

/// Principal argument in `(-π, π]`; a negative real number maps to `π`.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Trace of the model Jacobian at `x`.
pub fn divergence<M: SystemModel + ?Sized>(model: &M, x: &[f64]) -> f64 {
    let n = model.dim();
    let mut jac = vec![0.0; n * n];
    model.jacobian(x, &mut jac);
    (0..n).map(|i| jac[i * n + i]).sum()
}

/// Caputo-type divergence of the model in the `(x1, x2)` plane:
/// `-(Γ(2)/Γ(2-q)) (x1^(1-q) + x2^(1-q))`.
///
/// Defined on the open positive quadrant only.
pub fn fractional_divergence(q: f64, x1: f64, x2: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid("q", format!("must lie in (0, 1), got {q}")));
    }
    if !(x1 > 0.0 && x1.is_finite()) {
        return Err(Error::invalid("x1", format!("must be positive, got {x1}")));
    }
    if !(x2 > 0.0 && x2.is_finite()) {
        return Err(Error::invalid("x2", format!("must be positive, got {x2}")));
    }
    let s = 1.0 - q;
    Ok(-(1.0 / gamma(2.0 - q)) * (x1.powf(s) + x2.powf(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn field_at_origin() {
        let m = Idmde::new(5.0).unwrap();
        assert_eq!(m.field3([0.0, 0.0, 0.0]), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn field_hand_substitution() {
        let m = Idmde::new(3.46).unwrap();
        let f = m.field3([1.0, 1.0, 1.0]);
        assert_eq!(f[0], 0.0);
        assert_relative_eq!(f[1], -3.46, epsilon = 1e-15);
        assert_eq!(f[2], 0.0);
    }

    #[test]
    fn field_nearly_vanishes_at_rounded_equilibrium() {
        let m = Idmde::new(5.0).unwrap();
        let f = m.eval_field(&[-2.2787, -0.4388, 5.1926]);
        assert!(max_abs(&f) < 1e-3, "{f:?}");
    }

    #[test]
    fn jacobian_at_origin_and_probe() {
        let m = Idmde::new(5.0).unwrap();
        assert_eq!(
            m.jacobian3([0.0; 3]),
            Matrix3::new(-1.0, 0.0, 0.0, -5.0, -1.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(
            m.jacobian3([1.0, 2.0, 3.0]),
            Matrix3::new(-1.0, 3.0, 2.0, -2.0, -1.0, 1.0, -2.0, -1.0, 0.0)
        );
        let dyn_j = m.eval_jacobian(&[1.0, 2.0, 3.0]);
        assert_eq!(dyn_j[(1, 0)], -2.0);
        assert_eq!(dyn_j[(2, 1)], -1.0);
    }

    #[test]
    fn trace_at_equilibrium_is_minus_two() {
        let m = Idmde::new(5.0).unwrap();
        let [e1, e2] = m.equilibria().unwrap();
        assert_eq!(m.jacobian3(e1.location).trace(), -2.0);
        assert_eq!(divergence(&m, &e2.location), -2.0);
        let m10 = Idmde::new(10.0).unwrap();
        let [_, e2] = m10.equilibria().unwrap();
        assert_eq!(m10.divergence(e2.location), -2.0);
        let m01 = Idmde::new(0.1).unwrap();
        assert_eq!(m01.divergence([7.0, -3.0, 2.0]), -2.0);
    }

    #[test]
    fn equilibria_at_p5() {
        let [e1, e2] = equilibria(5.0).unwrap();
        let want = [-2.2787, -0.4388, 5.1926];
        for i in 0..3 {
            assert!((e1.location[i] - want[i]).abs() < 5e-5, "{:?}", e1.location);
        }
        assert!((e2.location[0] - 2.2787).abs() < 5e-5);
        assert!((e2.location[1] - 0.4388).abs() < 5e-5);
        assert_eq!(e1.location[2], e2.location[2]);
        // ω² = x1² + x2² + 1 - x3(x3 - p) from the characteristic
        // polynomial (λ + 2)(λ² + ω²); frozen with mpmath.
        let omega = 2.320_595_787_106_084;
        for e in [e1, e2] {
            let [a, b, c] = e.eigenvalues;
            // Sorted descending: +iω, -iω, -2.
            assert!((a.re).abs() < 1e-10 && (a.im - omega).abs() < 1e-12, "{a}");
            assert!((b.re).abs() < 1e-10 && (b.im + omega).abs() < 1e-12, "{b}");
            assert!((c.re + 2.0).abs() < 1e-10 && c.im.abs() < 1e-10);
            assert_eq!(e.arguments[2], PI);
            assert_relative_eq!(e.arguments[0], PI / 2.0, epsilon = 1e-9);
            assert_relative_eq!(e.arguments[1], -PI / 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn rounded_coordinates_reproduce_published_frequency() {
        // The published ±2.32053i comes from the Jacobian at the 4-decimal
        // coordinates, not at the exact equilibrium.
        let m = Idmde::new(5.0).unwrap();
        let ev = spectrum3(&m.jacobian3([-2.2787, -0.4388, 5.1926])).unwrap();
        assert!((ev[0].im - 2.32053).abs() < 5e-6, "{}", ev[0]);
    }

    #[test]
    fn equilibrium_at_p1_2() {
        let [e1, _] = equilibria(1.2).unwrap();
        let want = [-1.3290, -0.7525, 1.7662];
        for i in 0..3 {
            assert!((e1.location[i] - want[i]).abs() < 5e-5, "{:?}", e1.location);
        }
    }

    #[test]
    fn equilibria_reject_nonpositive_p() {
        assert!(equilibria(0.0).is_err());
        assert!(equilibria(-1.0).is_err());
        assert!(equilibria(f64::NAN).is_err());
    }

    #[test]
    fn equilibria_residual_and_spectrum_scan() {
        for k in 1..=100 {
            let p = 0.1 * k as f64;
            let m = Idmde::new(p).unwrap();
            for e in equilibria(p).unwrap() {
                assert!(max_abs(&m.field3(e.location)) < 1e-9, "p={p}");
                let [a, b, c] = e.eigenvalues;
                assert!((c.re + 2.0).abs() < 1e-8 && c.im.abs() < 1e-8, "p={p}: {c}");
                assert!(a.re.abs() < 1e-8 && b.re.abs() < 1e-8, "p={p}");
                assert!(a.im > 0.0);
                assert_relative_eq!(a.im, -b.im, epsilon = 1e-10);
                // Conjugate-closed.
                assert_relative_eq!(a.conj().re, b.re, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn principal_arg_branch() {
        assert_eq!(principal_arg(Complex64::new(-2.0, 0.0)), PI);
        assert_eq!(principal_arg(Complex64::new(-2.0, -0.0)), PI);
        assert_eq!(principal_arg(Complex64::new(1.0, 0.0)), 0.0);
        assert_relative_eq!(principal_arg(Complex64::new(0.0, -1.0)), -PI / 2.0);
    }

    // Frozen with mpmath at 30 digits.
    #[test]
    fn fractional_divergence_values() {
        let v = fractional_divergence(0.995, 1.0, 1.0).unwrap();
        assert_relative_eq!(v, -2.005_739_352_452_69, epsilon = 1e-11);
        let v = fractional_divergence(0.5, 4.0, 1.0).unwrap();
        assert_relative_eq!(v, -3.385_137_501_286_538, epsilon = 1e-12);
        let v = fractional_divergence(1.0 - 1e-6, 2.5, 0.3).unwrap();
        assert!((v + 2.0).abs() < 1e-4, "{v}");
    }

    #[test]
    fn fractional_divergence_domain() {
        assert!(fractional_divergence(0.9, -1.0, 1.0).is_err());
        assert!(fractional_divergence(0.9, 1.0, 0.0).is_err());
        assert!(fractional_divergence(1.0, 1.0, 1.0).is_err());
        assert!(fractional_divergence(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn reference_models() {
        let z = ZeroField { dim: 4 };
        assert_eq!(z.eval_field(&[1.0, 2.0, 3.0, 4.0]), vec![0.0; 4]);
        assert_eq!(divergence(&z, &[1.0; 4]), 0.0);
        let l = LinearDecay::new(2.0);
        assert_eq!(l.eval_field(&[3.0]), vec![-6.0]);
        assert_eq!(l.eval_jacobian(&[3.0])[(0, 0)], -2.0);
    }
}
