//! Numerical experiments around Euler products, the derivative zero between
//! paired zeros, the local involution exchanging paired zeros, and
//! partial-product ratio traces.

use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::arith::sieve;
use crate::error::{Error, Result};
use crate::evaluator::{reflection, CauchyParams, FunctionHandle};
use crate::format::{fmt_complex, fmt_num};
use crate::series::{ExponentRule, SeriesSpec};
use crate::sum::CompensatedSum;
use crate::zeros::{SearchRegion, ZeroPair};

/// One pass/fail line: `measured <= tolerance` unless stated otherwise by `passed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check { name: name.into(), measured, tolerance, passed: measured <= tolerance }
    }

    pub fn less_than(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check { name: name.into(), measured, tolerance, passed: measured < tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TheoremReport {
    pub kind: String,
    pub inputs: Vec<(String, String)>,
    pub checks: Vec<Check>,
    /// Extra measured quantities that are recorded but not asserted.
    pub notes: Vec<(String, String)>,
    pub csv: String,
}

impl TheoremReport {
    pub fn new(kind: &str) -> Self {
        TheoremReport { kind: kind.to_string(), ..Default::default() }
    }

    pub fn input(mut self, key: &str, value: impl Into<String>) -> Self {
        self.inputs.push((key.to_string(), value.into()));
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `kind inputs check measured tolerance PASS|FAIL`, one line per check,
    /// followed by `note` lines.
    pub fn lines(&self) -> String {
        let inputs: Vec<String> = self.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let inputs = inputs.join(" ");
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {} check={} measured={} tolerance={} {}",
                self.kind,
                inputs,
                c.name,
                fmt_num(c.measured),
                fmt_num(c.tolerance),
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        for (k, v) in &self.notes {
            let _ = writeln!(out, "{} note {k}={v}", self.kind);
        }
        out
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lines())
    }
}

fn sigma_c(spec: &SeriesSpec) -> Result<f64> {
    match spec.sigma_c_estimate() {
        Some(v) => Ok(v),
        None => Ok(spec.abscissa_of_convergence(10_000)?.value),
    }
}

fn require_margin(spec: &SeriesSpec, s: Complex64, margin: f64) -> Result<()> {
    let sc = sigma_c(spec)?;
    if s.re <= sc + margin {
        return Err(Error::InvalidArgument(format!("Re s = {} is not above sigma_c + {margin} = {}", s.re, sc + margin)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerResidual {
    pub residual: f64,
    pub product: Complex64,
    pub sum: Complex64,
    /// Terms in the partial sum: `P^2`, capped at the sieve bound.
    pub n_terms: u64,
    /// Analytic size of both truncation tails (log exponents with `|a_p| <= 1` only).
    pub tail_estimate: Option<f64>,
}

/// `|prod_{p<=P} (1 - a_p e^{-lambda_p s})^{-1} - sum_{n<=P^2} a_n e^{-lambda_n s}|`.
pub fn euler_product_residual(spec: &SeriesSpec, s: Complex64, prime_bound: u64) -> Result<EulerResidual> {
    require_margin(spec, s, 0.5)?;
    let n_terms = prime_bound.saturating_mul(prime_bound).min(sieve().bound()).max(1);
    let product = spec.euler_partial_product(s, prime_bound)?;
    let sum = spec.partial_sum(s, n_terms)?;
    let tail_estimate = match spec.exponents {
        ExponentRule::Log if s.re > 1.0 => {
            let p = prime_bound.max(2) as f64;
            let n = n_terms as f64;
            let x = s.re - 1.0;
            Some(p.powf(-x) / (x * p.ln()) + n.powf(-x) / x)
        }
        _ => None,
    };
    Ok(EulerResidual { residual: (product - sum).norm(), product, sum, n_terms, tail_estimate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveStep {
    /// `|prod_{p<=p_k}(1 - a_p e^{-lambda_p s}) S_N - S'_N|`.
    pub residual: f64,
    /// `B = sum_{d>1} |a_d| e^{-lambda_d sigma} sum_{N/d<n<=N} |a_n| e^{-lambda_n sigma}`
    /// over squarefree `p_k`-smooth `d`.
    pub bound: f64,
    /// `C` in `B = C e^{-lambda_N sigma}`.
    pub constant: f64,
    /// `residual - bound`; `<= 0` when the inequality holds.
    pub excess: f64,
}

/// After multiplying the partial sum by the first `k` Euler factors, what
/// remains should be the sum over `n` coprime to those primes, up to terms
/// beyond `N` that the product pushes in.
pub fn sieve_step_check(spec: &SeriesSpec, s: Complex64, k: usize, n: u64) -> Result<SieveStep> {
    require_margin(spec, s, 0.5)?;
    let primes: Vec<u64> = sieve().first_primes(k)?.iter().map(|&p| p as u64).collect();
    let (a, lam) = spec.tables(n)?;
    let n = n as usize;
    let term = |m: usize| a[m] * Complex64::from_polar((-lam[m] * s.re).exp(), -lam[m] * s.im);
    let mut full = crate::sum::ComplexSum::new();
    let mut coprime = crate::sum::ComplexSum::new();
    for m in 1..=n {
        if a[m] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let x = term(m);
        full.add(x);
        if primes.iter().all(|&p| m as u64 % p != 0) {
            coprime.add(x);
        }
    }
    let mut factor = Complex64::new(1.0, 0.0);
    for &p in &primes {
        factor *= spec.euler_factor(s, p)?;
    }
    let residual = (factor * full.value() - coprime.value()).norm();

    // suffix sums of |a_m| e^{-lambda_m sigma}
    let mut suffix = vec![0.0; n + 2];
    for m in (1..=n).rev() {
        suffix[m] = suffix[m + 1] + a[m].norm() * (-lam[m] * s.re).exp();
    }
    let mut bound = CompensatedSum::new();
    for mask in 1u64..(1u64 << primes.len()) {
        let mut d = 1u64;
        let mut ad = Complex64::new(1.0, 0.0);
        let mut ld = 0.0;
        for (i, &p) in primes.iter().enumerate() {
            if mask & (1 << i) != 0 {
                d *= p;
                ad *= spec.coefficients.prime_value(p);
                ld += spec.exponents.prime_exponent(p);
            }
        }
        let lo = (n as u64 / d) as usize + 1;
        if lo <= n {
            bound.add(ad.norm() * (-ld * s.re).exp() * suffix[lo]);
        }
    }
    let bound = bound.value();
    Ok(SieveStep { residual, bound, constant: bound * (lam[n] * s.re).exp(), excess: residual - bound })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentConfig {
    pub tau_grid: usize,
    /// How far the root of `f'` may sit from the segment.
    pub seg_tol: f64,
    pub line_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig { tau_grid: 400, seg_tol: 1e-4, line_tol: 1e-6, newton_max_iter: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentExperiment {
    pub pair: ZeroPair,
    pub tau_grid: usize,
    /// Parameter of the projection of the root onto `s(tau) = (1-tau) s_1 + tau s_2`.
    pub tau0: f64,
    /// Root of `f'` nearest the segment.
    pub point: Complex64,
    pub abs_derivative: f64,
    pub distance_to_segment: f64,
    /// `|Im s(tau0) - t|`.
    pub im_offset: f64,
    /// Smallest `|f'|` sampled on the segment itself.
    pub min_on_segment: f64,
    pub value: Complex64,
}

impl SegmentExperiment {
    pub fn re_point(&self) -> f64 {
        self.point.re
    }
}

fn newton_on_derivative(h: &FunctionHandle, start: Complex64, max_iter: usize) -> Result<Option<Complex64>> {
    let cauchy = CauchyParams::default();
    let mut s = start;
    for _ in 0..max_iter {
        let d1 = h.value_and_derivative(s)?.1;
        let d2 = h.derivative_with(s, 2, &cauchy)?.value;
        if d2.norm() == 0.0 {
            return Ok(None);
        }
        let step = d1 / d2;
        s -= step;
        if step.norm() < 1e-13 * (1.0 + s.norm()) {
            return Ok(Some(s));
        }
        if step.norm() > 1.0 {
            return Ok(None);
        }
    }
    Ok(Some(s))
}

/// Scans `|f'|` along the segment between the paired zeros, then refines the
/// most promising minima by Newton on `f'` in the plane. Returns the root
/// closest to the segment whether or not it lies within `seg_tol`.
pub fn nearest_derivative_zero(h: &FunctionHandle, pair: &ZeroPair, cfg: &SegmentConfig) -> Result<SegmentExperiment> {
    let s1 = pair.right.location;
    let s2 = pair.left.location;
    if s1.re <= 0.5 + cfg.line_tol {
        return Err(Error::InvalidArgument(format!("pair at {} is not off the critical line", fmt_complex(s1))));
    }
    let at = |tau: f64| s1 * (1.0 - tau) + s2 * tau;
    let samples: Vec<(f64, f64)> = (0..=cfg.tau_grid)
        .map(|k| {
            let tau = k as f64 / cfg.tau_grid as f64;
            Ok((tau, h.value_and_derivative(at(tau))?.1.norm()))
        })
        .collect::<Result<_>>()?;
    let min_on_segment = samples.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let mut minima: Vec<(f64, f64)> = (1..samples.len() - 1)
        .filter(|&i| samples[i].1 <= samples[i - 1].1 && samples[i].1 <= samples[i + 1].1)
        .map(|i| samples[i])
        .collect();
    minima.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let len = (s2 - s1).norm();
    let mut best: Option<SegmentExperiment> = None;
    for &(tau, _) in minima.iter().take(4) {
        let Some(root) = newton_on_derivative(h, at(tau), cfg.newton_max_iter)? else {
            continue;
        };
        let u = (((root - s1) * (s2 - s1).conj()).re / (len * len)).clamp(0.0, 1.0);
        let dist = (root - at(u)).norm();
        let (value, d) = h.value_and_derivative(root)?;
        let candidate = SegmentExperiment {
            pair: *pair,
            tau_grid: cfg.tau_grid,
            tau0: u,
            point: root,
            abs_derivative: d.norm(),
            distance_to_segment: dist,
            im_offset: (root.im - s1.im).abs(),
            min_on_segment,
            value,
        };
        if best.is_none_or(|b| dist < b.distance_to_segment) {
            best = Some(candidate);
        }
    }
    best.ok_or(Error::NoRootOnSegment { min_abs_derivative: min_on_segment })
}

/// As [`nearest_derivative_zero`], but a root further than `seg_tol` from
/// the segment, or with `|f'| > deriv_tol`, is reported as `NoRootOnSegment`.
pub fn segment_derivative_zero(h: &FunctionHandle, pair: &ZeroPair, deriv_tol: f64, cfg: &SegmentConfig) -> Result<SegmentExperiment> {
    let e = nearest_derivative_zero(h, pair, cfg)?;
    if e.distance_to_segment > cfg.seg_tol || e.abs_derivative > deriv_tol {
        return Err(Error::NoRootOnSegment { min_abs_derivative: e.min_on_segment });
    }
    Ok(e)
}

/// Newton solve of `f(w) = f(s)` from `seed`: the local involution at `s`.
pub fn solve_conjugate_point(h: &FunctionHandle, s: Complex64, seed: Complex64) -> Result<Complex64> {
    let target = h.value(s)?;
    let scale = 1.0 + target.norm();
    let mut w = seed;
    let cell = SearchRegion { sigma_min: seed.re - 0.5, sigma_max: seed.re + 0.5, t_min: seed.im - 0.5, t_max: seed.im + 0.5 };
    for _ in 0..60 {
        let (f, d) = h.value_and_derivative(w)?;
        if d.norm() == 0.0 {
            return Err(Error::NewtonDiverged { cell });
        }
        let step = (f - target) / d;
        w -= step;
        if !w.re.is_finite() || (w - seed).norm() > 2.0 {
            return Err(Error::NewtonDiverged { cell });
        }
        if step.norm() <= 1e-15 * (1.0 + w.norm()) || ((f - target).norm() <= 1e-15 * scale && step.norm() < 1e-12) {
            break;
        }
    }
    if (h.value(w)? - target).norm() > 1e-10 * scale {
        return Err(Error::NewtonDiverged { cell });
    }
    if (w - s).norm() < 1e-8 {
        return Err(Error::CollapsedToIdentity(w));
    }
    Ok(w)
}

/// `phi(s)` seeded at the reflection of `s`.
pub fn phi(h: &FunctionHandle, s: Complex64) -> Result<Complex64> {
    solve_conjugate_point(h, s, reflection(s))
}

/// Central finite difference of the local involution, each evaluation seeded at `phi(s)`.
pub fn phi_derivative(h: &FunctionHandle, s: Complex64, phi_s: Complex64, step: f64) -> Result<Complex64> {
    let plus = solve_conjugate_point(h, s + step, phi_s)?;
    let minus = solve_conjugate_point(h, s - step, phi_s)?;
    Ok((plus - minus) / (2.0 * step))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvolutionProbe {
    pub s: Complex64,
    pub phi: Complex64,
    pub round_trip: f64,
    pub derivative_product_error: f64,
    /// `|phi'(s)| < 1` from the finite difference.
    pub contracts: bool,
    /// `|f'(s)| < |f'(phi(s))|` from the analytic derivative.
    pub derivative_smaller: bool,
}

/// Round trip, derivative-product and contraction-asymmetry probe at `s`.
pub fn involution_probe(h: &FunctionHandle, s: Complex64) -> Result<InvolutionProbe> {
    let step = 1e-5;
    let p = phi(h, s)?;
    let back = solve_conjugate_point(h, p, s)?;
    let d1 = phi_derivative(h, s, p, step)?;
    let d2 = phi_derivative(h, p, s, step)?;
    let fs = h.value_and_derivative(s)?.1.norm();
    let fp = h.value_and_derivative(p)?.1.norm();
    Ok(InvolutionProbe {
        s,
        phi: p,
        round_trip: (back - s).norm(),
        derivative_product_error: (d1 * d2 - 1.0).norm(),
        contracts: d1.norm() < 1.0,
        derivative_smaller: fs < fp,
    })
}

/// `|(1 - a w^{1-s'})/(1 - a w^{s'}) - (e^{lambda(1-sigma+it)} - a)/(e^{lambda(sigma+it)} - a) e^{lambda(2 sigma - 1)}|`
/// for one prime, written with `w = e^{-lambda}`.
pub fn factor_identity_residual(a_p: Complex64, lambda_p: f64, sigma: f64, t: f64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let s_left = Complex64::new(1.0 - sigma, t);
    let s_right = Complex64::new(sigma, t);
    let lhs = (one - a_p * (-s_left * lambda_p).exp()) / (one - a_p * (-s_right * lambda_p).exp());
    let rhs = ((s_left * lambda_p).exp() - a_p) / ((s_right * lambda_p).exp() - a_p) * (lambda_p * (2.0 * sigma - 1.0)).exp();
    (lhs - rhs).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioTrace {
    pub sigma: f64,
    pub t: f64,
    pub prime_cutoffs: Vec<u64>,
    /// `P_N = prod_{p<=N} (1 - a_p e^{-lambda_p(1-sigma+it)})/(1 - a_p e^{-lambda_p(sigma+it)})`.
    pub values: Vec<Complex64>,
    /// `sum_{p<=N} lambda_p (2 sigma - 1)`.
    pub envelope: Vec<f64>,
}

impl RatioTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cutoff,re_p,im_p,log_abs_p,envelope,log_abs_minus_envelope\n");
        for ((n, v), e) in self.prime_cutoffs.iter().zip(&self.values).zip(&self.envelope) {
            let la = v.norm().ln();
            let _ = writeln!(out, "{},{},{},{},{},{}", n, fmt_num(v.re), fmt_num(v.im), fmt_num(la), fmt_num(*e), fmt_num(la - e));
        }
        out
    }
}

/// Accumulates `ln` of each factor ratio with compensated sums, so the
/// trace at `sigma = 1/2` is exactly 1.
pub fn ratio_product_trace(spec: &SeriesSpec, sigma: f64, t: f64, cutoffs: &[u64]) -> Result<RatioTrace> {
    let mut cutoffs = cutoffs.to_vec();
    cutoffs.sort_unstable();
    cutoffs.dedup();
    let max = cutoffs.last().copied().unwrap_or(0);
    let primes = sieve().primes_up_to(max)?;
    let s_left = Complex64::new(1.0 - sigma, t);
    let s_right = Complex64::new(sigma, t);
    let (mut re, mut im, mut env) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    let mut trace = RatioTrace { sigma, t, prime_cutoffs: cutoffs.clone(), values: Vec::new(), envelope: Vec::new() };
    let mut next = 0;
    let emit = |re: &CompensatedSum, im: &CompensatedSum, env: &CompensatedSum, trace: &mut RatioTrace| {
        trace.values.push(Complex64::new(re.value(), im.value()).exp());
        trace.envelope.push(env.value());
    };
    for &p in primes {
        let p = p as u64;
        while next < cutoffs.len() && cutoffs[next] < p {
            emit(&re, &im, &env, &mut trace);
            next += 1;
        }
        let num = spec.euler_factor(s_left, p)?;
        let den = spec.euler_factor(s_right, p)?;
        let l = num.ln() - den.ln();
        re.add(l.re);
        im.add(l.im);
        env.add(spec.exponents.prime_exponent(p) * (2.0 * sigma - 1.0));
    }
    while next < cutoffs.len() {
        emit(&re, &im, &env, &mut trace);
        next += 1;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::character::character_table;
    use crate::zeros::ZeroRecord;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn euler_residual_decreases_with_p() {
        let z = SeriesSpec::zeta();
        let r3 = euler_product_residual(&z, c(3.0, 0.0), 1000).unwrap();
        let r4 = euler_product_residual(&z, c(3.0, 0.0), 10_000).unwrap();
        assert!(r4.residual < r3.residual);
        assert!(r4.residual < 1e-8, "{}", r4.residual);
        // the analytic tail estimate tracks the measured residual within a factor of 2
        let est = r3.tail_estimate.unwrap();
        assert!(r3.residual < 2.0 * est && est < 2.0 * r3.residual, "{} vs {est}", r3.residual);
    }

    #[test]
    fn euler_residual_for_character() {
        let chi = character_table(5).unwrap().into_iter().find(|x| x.value(2) == c(0.0, 1.0)).unwrap();
        let spec = SeriesSpec::dirichlet(chi);
        let r = euler_product_residual(&spec, c(2.0, 7.0), 10_000).unwrap();
        assert!(r.residual < 1e-6, "{}", r.residual);
    }

    #[test]
    fn euler_residual_requires_margin() {
        assert!(euler_product_residual(&SeriesSpec::zeta(), c(1.2, 0.0), 100).is_err());
    }

    #[test]
    fn sieve_step_inequality() {
        let z = SeriesSpec::zeta();
        assert_eq!(sieve_step_check(&z, c(3.0, 0.0), 0, 1000).unwrap().residual, 0.0);
        for k in 1..=3 {
            let r = sieve_step_check(&z, c(3.0, 0.0), k, 10_000).unwrap();
            assert!(r.excess <= 0.0, "k={k}: {r:?}");
            assert!(r.residual > 0.0);
        }
    }

    #[test]
    fn sieve_residual_shrinks_with_n() {
        let z = SeriesSpec::zeta();
        let a = sieve_step_check(&z, c(3.0, 1.0), 2, 1000).unwrap();
        let b = sieve_step_check(&z, c(3.0, 1.0), 2, 10_000).unwrap();
        assert!(b.residual < a.residual);
    }

    #[test]
    fn ratio_trace_is_one_on_the_line() {
        let tr = ratio_product_trace(&SeriesSpec::zeta(), 0.5, 30.0, &[100, 1000, 10_000]).unwrap();
        for v in &tr.values {
            assert_eq!(*v, c(1.0, 0.0));
        }
        assert!(tr.envelope.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn ratio_trace_emits_every_cutoff() {
        let tr = ratio_product_trace(&SeriesSpec::zeta(), 0.75, 20.0, &[1000, 100, 10_000]).unwrap();
        assert_eq!(tr.prime_cutoffs, vec![100, 1000, 10_000]);
        assert_eq!(tr.values.len(), 3);
        assert!(tr.envelope.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(tr.to_csv().lines().count(), 4);
    }

    #[test]
    fn factor_identity_at_two() {
        assert!(factor_identity_residual(c(1.0, 0.0), 2f64.ln(), 0.75, 10.0) <= 1e-12);
    }

    #[test]
    fn report_lines_cite_tolerance() {
        let mut r = TheoremReport::new("verify-euler").input("s", "3");
        r.checks.push(Check::less_than("residual", 1e-9, 1e-8));
        let text = r.lines();
        assert!(text.contains("tolerance=1.00000000000E-8 PASS"), "{text}");
        assert!(r.passed());
    }

    fn pair_at(sigma: f64, t: f64) -> ZeroPair {
        let rec = |s: f64| ZeroRecord { location: c(s, t), multiplicity: 1, residual: 0.0, newton_iters: 0, on_critical_line: false };
        ZeroPair { right: rec(sigma), left: rec(1.0 - sigma), pair_gap: 0.0 }
    }

    #[test]
    fn derivative_zero_between_first_dh_pair() {
        let h = FunctionHandle::davenport_heilbronn();
        let pair = pair_at(0.808517182456, 85.6993484854);
        let e = nearest_derivative_zero(&h, &pair, &SegmentConfig::default()).unwrap();
        assert!(e.abs_derivative < 1e-10);
        assert!(e.point.re < 0.5);
        assert!(e.min_on_segment >= e.abs_derivative);
    }

    #[test]
    fn involution_exchanges_paired_zeros() {
        let h = FunctionHandle::davenport_heilbronn();
        let right = c(0.8085171824566, 85.6993484853776);
        let left = phi(&h, right).unwrap();
        assert!((left - c(0.1914828175434, 85.6993484853776)).norm() < 1e-8, "{left}");
        let p = involution_probe(&h, right + c(0.01, 0.02)).unwrap();
        assert!(p.round_trip < 1e-8);
        assert!(p.derivative_product_error < 1e-5);
        assert_eq!(p.contracts, p.derivative_smaller);
    }

    #[test]
    fn collapse_to_identity_is_reported() {
        let h = FunctionHandle::davenport_heilbronn();
        let s = c(0.8, 85.7);
        assert!(matches!(solve_conjugate_point(&h, s, s + c(1e-3, 0.0)), Err(Error::CollapsedToIdentity(_))));
    }
}
