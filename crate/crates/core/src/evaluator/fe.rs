//! Riemann-type functional equations `f(s) = M(s) conj(f(conj(1 - s)))`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::character::DirichletCharacter;
use crate::special::{digamma, ln_gamma};

/// One multiplicative piece of `M(s)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MFactor {
    Scalar(Complex64),
    /// `base^(offset + slope s)`
    Power { base: f64, offset: f64, slope: f64 },
    /// `Gamma(scale s + shift)^exponent`
    Gamma { scale: f64, shift: f64, exponent: i32 },
    /// `(1 - p^-s) / (1 - p^(s-1))`, the correction for a principal character.
    EulerRatio { p: u64 },
}

impl MFactor {
    fn ln(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match *self {
            MFactor::Scalar(c) => c.ln(),
            MFactor::Power { base, offset, slope } => (s * slope + offset) * base.ln(),
            MFactor::Gamma { scale, shift, exponent } => ln_gamma(s * scale + shift) * exponent as f64,
            MFactor::EulerRatio { p } => {
                let lp = (p as f64).ln();
                (one - (-s * lp).exp()).ln() - (one - ((s - 1.0) * lp).exp()).ln()
            }
        }
    }

    fn dln(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match *self {
            MFactor::Scalar(_) => Complex64::new(0.0, 0.0),
            MFactor::Power { base, slope, .. } => Complex64::new(slope * base.ln(), 0.0),
            MFactor::Gamma { scale, shift, exponent } => digamma(s * scale + shift) * (scale * exponent as f64),
            MFactor::EulerRatio { p } => {
                let lp = (p as f64).ln();
                let u = (-s * lp).exp();
                let v = ((s - 1.0) * lp).exp();
                u * lp / (one - u) + v * lp / (one - v)
            }
        }
    }
}

impl fmt::Display for MFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MFactor::Scalar(c) => write!(f, "({}{:+}i)", c.re, c.im),
            MFactor::Power { base, offset, slope } => write!(f, "{base}^({offset}{slope:+}s)"),
            MFactor::Gamma { scale, shift, exponent } => write!(f, "Gamma({scale}s{shift:+})^{exponent}"),
            MFactor::EulerRatio { p } => write!(f, "(1-{p}^-s)/(1-{p}^(s-1))"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalEquationForm {
    pub factors: Vec<MFactor>,
}

impl FunctionalEquationForm {
    /// `pi^(s-1/2) Gamma((1-s)/2) / Gamma(s/2)`.
    pub fn riemann() -> Self {
        Self::completed(1, 0, Complex64::new(1.0, 0.0))
    }

    /// `eps (q/pi)^(1/2-s) Gamma((1-s+a)/2) / Gamma((s+a)/2)` for a primitive
    /// character of conductor `q` and parity `a`.
    pub fn completed(q: u64, parity: u32, root_number: Complex64) -> Self {
        let a = parity as f64;
        let mut factors = Vec::new();
        if root_number != Complex64::new(1.0, 0.0) {
            factors.push(MFactor::Scalar(root_number));
        }
        factors.push(MFactor::Power { base: q as f64 / PI, offset: 0.5, slope: -1.0 });
        factors.push(MFactor::Gamma { scale: -0.5, shift: (1.0 + a) / 2.0, exponent: 1 });
        factors.push(MFactor::Gamma { scale: 0.5, shift: a / 2.0, exponent: -1 });
        FunctionalEquationForm { factors }
    }

    /// Primitive characters get the completed form with root number
    /// `tau(chi) / (i^a sqrt q)`; principal ones the zeta form times Euler
    /// corrections at each prime dividing the modulus. Other imprimitive
    /// characters have no registered form.
    pub fn for_character(chi: &DirichletCharacter) -> Option<Self> {
        if chi.modulus() == 1 || chi.is_principal() {
            let mut form = Self::riemann();
            for p in chi.modulus_primes() {
                form.factors.push(MFactor::EulerRatio { p });
            }
            return Some(form);
        }
        if !chi.is_primitive() {
            return None;
        }
        let q = chi.modulus();
        let a = chi.parity();
        let i_a = if a == 1 { Complex64::i() } else { Complex64::new(1.0, 0.0) };
        let eps = chi.gauss_sum() / (i_a * (q as f64).sqrt());
        Some(Self::completed(q, a, eps))
    }

    pub fn ln_m(&self, s: Complex64) -> Complex64 {
        self.factors.iter().map(|f| f.ln(s)).sum()
    }

    pub fn m(&self, s: Complex64) -> Complex64 {
        self.ln_m(s).exp()
    }

    /// `M'(s) / M(s)`.
    pub fn log_derivative(&self, s: Complex64) -> Complex64 {
        self.factors.iter().map(|f| f.dln(s)).sum()
    }
}

impl fmt::Display for FunctionalEquationForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(" * "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riemann_factor_against_classical_form() {
        // chi(s) = 2^s pi^(s-1) sin(pi s / 2) Gamma(1 - s)
        let form = FunctionalEquationForm::riemann();
        for &s in &[Complex64::new(0.3, 2.0), Complex64::new(-1.5, 0.7), Complex64::new(2.5, -1.0)] {
            let classical = Complex64::new(2.0, 0.0).powc(s)
                * Complex64::new(PI, 0.0).powc(s - 1.0)
                * (s * (PI / 2.0)).sin()
                * ln_gamma(Complex64::new(1.0, 0.0) - s).exp();
            let m = form.m(s);
            assert!((m - classical).norm() < 1e-12 * classical.norm(), "{s}: {m} vs {classical}");
        }
    }

    #[test]
    fn log_derivative_matches_difference() {
        let chi = crate::character::character_table(5).unwrap().remove(0);
        let form = FunctionalEquationForm::for_character(&chi).unwrap();
        let s = Complex64::new(0.3, 12.0);
        let h = 1e-6;
        let fd = (form.m(s + h) - form.m(s - h)) / (2.0 * h) / form.m(s);
        assert!((form.log_derivative(s) - fd).norm() < 1e-7);
    }

    #[test]
    fn m_times_m_reflected_is_one() {
        // applying the equation twice: M(s) conj(M(conj(1-s))) = 1
        for chi in crate::character::character_table(5).unwrap() {
            let form = FunctionalEquationForm::for_character(&chi).unwrap();
            let s = Complex64::new(0.2, 7.0);
            let w = (Complex64::new(1.0, 0.0) - s).conj();
            let prod = form.m(s) * form.m(w).conj();
            assert!((prod - 1.0).norm() < 1e-12, "{chi:?}: {prod}");
        }
    }
}
