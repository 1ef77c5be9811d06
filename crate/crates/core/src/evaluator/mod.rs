//! Analytically continued evaluation of Dirichlet-type functions.
//!
//! Every function is an [`AnalyticFunction`] behind a shared
//! [`FunctionHandle`]; [`registry::HandleRegistry`] builds handles from
//! descriptor strings such as `zeta`, `dh`, `L:5:2=i` or `hurwitz:0.25`.

pub mod fe;
pub mod functions;
pub mod hurwitz;
pub mod registry;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::SeriesSpec;
use crate::sum::ComplexSum;

pub use fe::{FunctionalEquationForm, MFactor};
pub use functions::{davenport_heilbronn_kappa, DavenportHeilbronn, DirichletL, HurwitzZeta, RiemannZeta, TruncatedGeneral};
pub use hurwitz::{hurwitz_zeta, EvaluationParams, HurwitzValue};
pub use registry::HandleRegistry;

/// Left of this abscissa, handles with a functional equation are evaluated
/// through it instead of directly.
pub const REFLECT_BELOW: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationResult {
    pub value: Complex64,
    /// Analytic `f'(s)` when the backend provides it.
    pub derivative: Option<Complex64>,
    /// Size of the first omitted Euler-Maclaurin correction. A heuristic, not a rigorous bound.
    pub error_bound: f64,
    pub terms_used: usize,
    /// Set for truncated series evaluated where the truncation is not a continuation.
    pub truncation_only: bool,
}

/// A function that can be evaluated anywhere off its poles.
pub trait AnalyticFunction: Send + Sync + fmt::Debug {
    /// Registry descriptor that rebuilds an equivalent handle.
    fn descriptor(&self) -> String;

    /// Direct evaluation (no use of the functional equation).
    fn evaluate_direct(&self, s: Complex64) -> Result<EvaluationResult>;

    fn poles(&self) -> &[Complex64] {
        &[]
    }

    fn functional_equation(&self) -> Option<&FunctionalEquationForm> {
        None
    }

    /// `f(conj s) = conj f(s)`.
    fn has_real_coefficients(&self) -> bool;

    fn series(&self) -> Option<&SeriesSpec> {
        None
    }
}

/// Cauchy-circle quadrature settings for [`FunctionHandle::derivative`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyParams {
    pub radius: f64,
    pub nodes: usize,
}

impl Default for CauchyParams {
    fn default() -> Self {
        CauchyParams { radius: 1e-3, nodes: 32 }
    }
}

#[derive(Clone)]
pub struct FunctionHandle(Arc<dyn AnalyticFunction>);

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FunctionHandle({})", self.0.descriptor())
    }
}

/// `sigma + it -> (1 - sigma) + it`.
pub fn reflection(s: Complex64) -> Complex64 {
    Complex64::new(1.0 - s.re, s.im)
}

impl FunctionHandle {
    pub fn new<F: AnalyticFunction + 'static>(f: F) -> Self {
        FunctionHandle(Arc::new(f))
    }

    pub fn zeta() -> Self {
        Self::new(RiemannZeta::new(EvaluationParams::default()))
    }

    pub fn davenport_heilbronn() -> Self {
        Self::new(DavenportHeilbronn::new(EvaluationParams::default()))
    }

    pub fn inner(&self) -> &dyn AnalyticFunction {
        &*self.0
    }

    pub fn descriptor(&self) -> String {
        self.0.descriptor()
    }

    pub fn poles(&self) -> &[Complex64] {
        self.0.poles()
    }

    pub fn functional_equation(&self) -> Option<&FunctionalEquationForm> {
        self.0.functional_equation()
    }

    pub fn has_real_coefficients(&self) -> bool {
        self.0.has_real_coefficients()
    }

    /// The underlying Dirichlet series, for handles that have one.
    pub fn series(&self) -> Option<&SeriesSpec> {
        self.0.series()
    }

    /// `M(s)`, when a functional equation is registered.
    pub fn m_factor(&self, s: Complex64) -> Option<Complex64> {
        self.functional_equation().map(|fe| fe.m(s))
    }

    /// Value (and analytic derivative) with the functional equation used
    /// left of [`REFLECT_BELOW`].
    pub fn evaluate(&self, s: Complex64) -> Result<EvaluationResult> {
        if s.re < REFLECT_BELOW {
            if let Some(fe) = self.functional_equation() {
                let w = reflection(s);
                let r = self.0.evaluate_direct(w)?;
                let ln_m = fe.ln_m(s);
                let m = ln_m.exp();
                let g = r.value.conj();
                let value = m * g;
                let derivative = r.derivative.map(|d| m * (fe.log_derivative(s) * g - d.conj()));
                return Ok(EvaluationResult {
                    value,
                    derivative,
                    error_bound: r.error_bound * m.norm(),
                    terms_used: r.terms_used,
                    truncation_only: r.truncation_only,
                });
            }
        }
        self.0.evaluate_direct(s)
    }

    pub fn value(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.evaluate(s)?.value)
    }

    /// `(f(s), f'(s))`, analytic where available, Cauchy quadrature otherwise.
    pub fn value_and_derivative(&self, s: Complex64) -> Result<(Complex64, Complex64)> {
        let e = self.evaluate(s)?;
        match e.derivative {
            Some(d) => Ok((e.value, d)),
            None => Ok((e.value, self.derivative(s, 1)?.value)),
        }
    }

    pub fn derivative(&self, s: Complex64, order: u32) -> Result<EvaluationResult> {
        self.derivative_with(s, order, &CauchyParams::default())
    }

    /// `f^(m)(s) = m!/(2 pi r^m) \oint f(s + r e^{i theta}) e^{-i m theta} d theta`
    /// on `K` equally spaced nodes.
    pub fn derivative_with(&self, s: Complex64, order: u32, cauchy: &CauchyParams) -> Result<EvaluationResult> {
        if !(1..=2).contains(&order) {
            return Err(Error::InvalidArgument(format!("derivative order {order} not in {{1, 2}}")));
        }
        let r = cauchy.radius;
        if let Some(&pole) = self.poles().iter().find(|p| (**p - s).norm() <= r) {
            return Err(Error::PoleInsideCircle { center: s, pole, radius: r });
        }
        let k = cauchy.nodes.max(4);
        let mut acc = ComplexSum::new();
        let mut terms = 0;
        let mut err = 0.0f64;
        let mut truncation_only = false;
        for j in 0..k {
            let theta = 2.0 * PI * j as f64 / k as f64;
            let w = Complex64::from_polar(1.0, theta);
            let e = self.evaluate(s + w * r)?;
            acc.add(e.value * Complex64::from_polar(1.0, -(order as f64) * theta));
            terms += e.terms_used;
            err = err.max(e.error_bound);
            truncation_only |= e.truncation_only;
        }
        let fact = if order == 2 { 2.0 } else { 1.0 };
        let scale = fact / (k as f64 * r.powi(order as i32));
        Ok(EvaluationResult {
            value: acc.value() * scale,
            derivative: None,
            error_bound: err * scale * k as f64,
            terms_used: terms,
            truncation_only,
        })
    }

    /// `|f(s) - M(s) conj(f(conj(1-s)))| / (|f(s)| + |M(s) conj(f(conj(1-s)))| + eps)`,
    /// both sides evaluated directly.
    pub fn functional_equation_residual(&self, s: Complex64) -> Result<f64> {
        let fe = self
            .functional_equation()
            .ok_or_else(|| Error::NoFunctionalEquation(self.descriptor()))?;
        let lhs = self.0.evaluate_direct(s)?.value;
        let w = (Complex64::new(1.0, 0.0) - s).conj();
        let rhs = fe.m(s) * self.0.evaluate_direct(w)?.value.conj();
        Ok((lhs - rhs).norm() / (lhs.norm() + rhs.norm() + 1e-300))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::character::character_table;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn chi5_i() -> crate::character::DirichletCharacter {
        character_table(5).unwrap().into_iter().find(|chi| chi.value(2) == Complex64::i()).unwrap()
    }

    #[test]
    fn reflection_examples() {
        let r = reflection(c(0.86953, 85.0));
        assert!((r - c(0.13047, 85.0)).norm() < 1e-12);
        assert_eq!(reflection(c(0.5, 14.0)), c(0.5, 14.0));
        assert_eq!(reflection(c(2.0, 0.0)), c(-1.0, 0.0));
    }

    #[test]
    fn zeta_values() {
        let z = FunctionHandle::zeta();
        let v = z.evaluate(c(2.0, 0.0)).unwrap();
        assert!((v.value - c(1.6449340668, 0.0)).norm() < 1e-9);
        assert!(v.error_bound < 1e-12);
        let far = z.value(c(40.0, 5.0)).unwrap();
        assert!((far - 1.0).norm() <= 2.0 * 2f64.powi(-40));
        assert!(matches!(z.evaluate(c(1.0, 0.0)), Err(Error::PoleAtOne)));
        // trivial zero at -2 through the reflected branch
        assert!(z.value(c(-2.0, 0.0)).unwrap().norm() < 1e-14);
        let v = z.value(c(-1.0, 0.0)).unwrap();
        assert!((v - c(-1.0 / 12.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn derivative_examples() {
        let z = FunctionHandle::zeta();
        let d = z.derivative(c(2.0, 0.0), 1).unwrap().value;
        // central differences with Richardson extrapolation
        let f = |x: f64| z.value(c(x, 0.0)).unwrap().re;
        let cd = |h: f64| (f(2.0 + h) - f(2.0 - h)) / (2.0 * h);
        let h = 1e-5;
        let rich = (4.0 * cd(h / 2.0) - cd(h)) / 3.0;
        assert!((d.re - rich).abs() < 1e-6);
        assert!((d.re + 0.93754825).abs() < 1e-6);
        let hz = FunctionHandle::new(HurwitzZeta::new(1.0, EvaluationParams::default()).unwrap());
        let dh = hz.derivative(c(2.0, 0.0), 1).unwrap().value;
        assert!((dh - d).norm() < 1e-12);
        assert!(matches!(z.derivative(c(1.0005, 0.0), 1), Err(Error::PoleInsideCircle { .. })));
        let one = FunctionHandle::new(TruncatedGeneral::new(SeriesSpec::zeta(), 1).unwrap());
        assert!(one.derivative(c(0.3, 2.0), 1).unwrap().value.norm() < 1e-12);
    }

    #[test]
    fn analytic_and_cauchy_derivatives_agree() {
        let handles = [
            FunctionHandle::zeta(),
            FunctionHandle::davenport_heilbronn(),
            FunctionHandle::new(DirichletL::new(chi5_i(), EvaluationParams::default())),
        ];
        for h in &handles {
            for &s in &[c(0.3, 14.0), c(-2.5, 30.0), c(2.0, 3.0)] {
                let (_, analytic) = h.value_and_derivative(s).unwrap();
                let cauchy = h.derivative(s, 1).unwrap().value;
                assert!((analytic - cauchy).norm() < 1e-8 * (1.0 + analytic.norm()), "{h:?} {s}");
            }
        }
    }

    #[test]
    fn functional_equation_residuals() {
        let z = FunctionHandle::zeta();
        assert!(z.functional_equation_residual(c(0.3, 14.0)).unwrap() < 1e-8);
        let l = FunctionHandle::new(DirichletL::new(chi5_i(), EvaluationParams::default()));
        assert!(l.functional_equation_residual(c(0.4, 30.0)).unwrap() < 1e-8);
        let dh = FunctionHandle::davenport_heilbronn();
        assert!(dh.functional_equation_residual(c(0.3, 40.0)).unwrap() < 1e-8);
        let trunc = FunctionHandle::new(TruncatedGeneral::new(SeriesSpec::zeta(), 10).unwrap());
        assert!(matches!(trunc.functional_equation_residual(c(0.3, 4.0)), Err(Error::NoFunctionalEquation(_))));
    }

    #[test]
    fn dh_modulus_symmetry() {
        // |f(s)| = |M(s)| |f(1 - conj s)| at s = 0.3 + 40i
        let dh = FunctionHandle::davenport_heilbronn();
        let s = c(0.3, 40.0);
        let lhs = dh.value(s).unwrap().norm();
        let rhs = dh.m_factor(s).unwrap().norm() * dh.value(reflection(s)).unwrap().norm();
        assert!((lhs - rhs).abs() <= 1e-8 * lhs);
    }

    #[test]
    fn entire_handles_are_finite_at_one() {
        let l = FunctionHandle::new(DirichletL::new(chi5_i(), EvaluationParams::default()));
        let at_one = l.value(c(1.0, 0.0)).unwrap();
        let near = l.value(c(1.0 + 1e-3, 0.0)).unwrap();
        assert!((at_one - near).norm() < 1e-2);
        let principal = FunctionHandle::new(DirichletL::new(character_table(5).unwrap().remove(0), EvaluationParams::default()));
        assert!(matches!(principal.evaluate(c(1.0, 0.0)), Err(Error::PoleAtOne)));
    }

    #[test]
    fn truncated_flag() {
        let spec = SeriesSpec::zeta();
        let h = FunctionHandle::new(TruncatedGeneral::new(spec, 1000).unwrap());
        assert!(h.evaluate(c(1.2, 0.0)).unwrap().truncation_only);
        assert!(!h.evaluate(c(3.0, 0.0)).unwrap().truncation_only);
    }
}
