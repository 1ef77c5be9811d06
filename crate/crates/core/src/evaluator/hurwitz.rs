//! Hurwitz zeta by Euler-Maclaurin summation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::BERNOULLI_EVEN;
use crate::sum::ComplexSum;

/// Euler-Maclaurin cutoff `N` and correction order `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationParams {
    /// Fixed cutoff; `None` means `max(50, ceil(2|t|))`.
    pub n_em: Option<usize>,
    pub m_em: usize,
}

impl Default for EvaluationParams {
    fn default() -> Self {
        EvaluationParams { n_em: None, m_em: 12 }
    }
}

impl EvaluationParams {
    pub fn cutoff(&self, s: Complex64) -> usize {
        self.n_em.unwrap_or_else(|| 50usize.max((2.0 * s.im.abs()).ceil() as usize))
    }

    /// Twice the cutoff, two more corrections.
    pub fn refined(&self, s: Complex64) -> Self {
        EvaluationParams { n_em: Some(2 * self.cutoff(s)), m_em: (self.m_em + 2).min(BERNOULLI_EVEN.len() - 1) }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HurwitzValue {
    pub value: Complex64,
    pub derivative: Complex64,
    /// Magnitude of the first omitted correction term.
    pub error_bound: f64,
    pub terms: usize,
}

fn even_factorial(two_j: usize) -> f64 {
    (1..=two_j).map(|k| k as f64).product()
}

/// `zeta(s, a) = sum_{k>=0} (k + a)^{-s}` continued by Euler-Maclaurin:
/// `sum_{k<N} (k+a)^{-s} + X^{1-s}/(s-1) + X^{-s}/2 + sum_j B_2j/(2j)! (s)_{2j-1} X^{-s-2j+1}`, `X = N + a`.
/// The derivative in `s` is accumulated alongside.
pub fn hurwitz_zeta(s: Complex64, a: f64, params: &EvaluationParams) -> Result<HurwitzValue> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidArgument(format!("Hurwitz parameter a={a} outside (0,1]")));
    }
    if (s - 1.0).norm() < 1e-12 {
        return Err(Error::PoleAtOne);
    }
    let n = params.cutoff(s);
    let m = params.m_em.min(BERNOULLI_EVEN.len() - 1);
    let mut head = ComplexSum::new();
    let mut dhead = ComplexSum::new();
    for k in 0..n {
        let x = k as f64 + a;
        let lx = x.ln();
        let term = Complex64::from_polar((-s.re * lx).exp(), -s.im * lx);
        head.add(term);
        dhead.add(-term * lx);
    }
    let x = n as f64 + a;
    let lx = x.ln();
    let base = Complex64::from_polar((-s.re * lx).exp(), -s.im * lx);
    let sm1 = s - 1.0;
    let tail = base * x / sm1;
    let dtail = -tail * lx - tail / sm1;
    let half = base * 0.5;
    let dhalf = -half * lx;

    let mut corr = ComplexSum::new();
    let mut dcorr = ComplexSum::new();
    let mut poch = s;
    let mut dpoch = Complex64::new(1.0, 0.0);
    let mut pow = base / x;
    let mut error_bound = 0.0;
    for j in 1..=m + 1 {
        let c = BERNOULLI_EVEN[j - 1] / even_factorial(2 * j);
        let t = poch * pow * c;
        if j == m + 1 {
            error_bound = t.norm();
            break;
        }
        corr.add(t);
        dcorr.add((dpoch * pow - poch * pow * lx) * c);
        for shift in [2 * j - 1, 2 * j] {
            let f = s + shift as f64;
            dpoch = dpoch * f + poch;
            poch *= f;
        }
        pow /= x * x;
    }
    Ok(HurwitzValue {
        value: head.value() + tail + half + corr.value(),
        derivative: dhead.value() + dtail + dhalf + dcorr.value(),
        error_bound,
        terms: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Direct summation plus the integral tail `(N+a)^{1-s}/(s-1) + (N+a)^{-s}/2`.
    fn brute(s: f64, a: f64) -> f64 {
        let n = 200_000;
        let head: f64 = (0..n).rev().map(|k| (k as f64 + a).powf(-s)).sum();
        let x = n as f64 + a;
        head + x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s)
    }

    #[test]
    fn zeta_two() {
        let p = EvaluationParams::default();
        let v = hurwitz_zeta(c(2.0, 0.0), 1.0, &p).unwrap();
        assert!((v.value.re - brute(2.0, 1.0)).abs() < 1e-9);
        assert!((v.value.re - 1.644934).abs() < 1e-6);
        assert!((v.value.re - PI * PI / 6.0).abs() < 1e-14);
        let half = hurwitz_zeta(c(2.0, 0.0), 0.5, &p).unwrap();
        assert!((half.value.re - 3.0 * v.value.re).abs() < 1e-13);
        assert!((half.value.re - 4.934802).abs() < 1e-6);
        assert!((half.value.re - brute(2.0, 0.5)).abs() < 1e-9);
    }

    #[test]
    fn zeta_zero_is_minus_half() {
        let p = EvaluationParams::default();
        let at = |x: f64| hurwitz_zeta(c(x, 0.0), 1.0, &p).unwrap().value.re;
        let h = 1e-3;
        // Richardson on the symmetric pair s = +-h, +-h/2
        let coarse = 0.5 * (at(h) + at(-h));
        let fine = 0.5 * (at(h / 2.0) + at(-h / 2.0));
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        assert!((extrapolated + 0.5).abs() < 1e-9);
        assert!((at(0.0) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_difference() {
        let p = EvaluationParams::default();
        for &s in &[c(2.0, 0.0), c(0.5, 14.0), c(-3.0, 40.0)] {
            let v = hurwitz_zeta(s, 0.3, &p).unwrap();
            let h = 1e-5;
            let fp = hurwitz_zeta(s + h, 0.3, &p).unwrap().value;
            let fm = hurwitz_zeta(s - h, 0.3, &p).unwrap().value;
            let fd = (fp - fm) / (2.0 * h);
            assert!((v.derivative - fd).norm() < 1e-7 * (1.0 + fd.norm()), "{s}");
        }
    }

    #[test]
    fn pole_and_domain() {
        let p = EvaluationParams::default();
        assert!(matches!(hurwitz_zeta(c(1.0, 0.0), 1.0, &p), Err(Error::PoleAtOne)));
        assert!(hurwitz_zeta(c(2.0, 0.0), 0.0, &p).is_err());
        assert!(hurwitz_zeta(c(2.0, 0.0), 1.5, &p).is_err());
    }
}
