//! General Dirichlet series `sum a_n e^{-lambda_n s}` with totally
//! multiplicative coefficients and additive exponents.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::sieve;
use crate::character::{character_table, DirichletCharacter};
use crate::error::{Error, Result};
use crate::format::parse_complex;
use crate::kv::KeyValues;
use crate::sum::ComplexSum;

/// `|1 - a_p e^{-lambda_p s}|` below this is reported as a vanishing factor.
pub const VANISHING_FACTOR_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum DefaultCoefficient {
    Constant(Complex64),
    Character(DirichletCharacter),
}

/// Values `a_p` on primes. `a_1 = 1` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeCoefficientMap {
    overrides: BTreeMap<u64, Complex64>,
    default: DefaultCoefficient,
}

impl PrimeCoefficientMap {
    pub fn constant(value: Complex64) -> Self {
        PrimeCoefficientMap { overrides: BTreeMap::new(), default: DefaultCoefficient::Constant(value) }
    }

    pub fn character(chi: DirichletCharacter) -> Self {
        PrimeCoefficientMap { overrides: BTreeMap::new(), default: DefaultCoefficient::Character(chi) }
    }

    pub fn with_override(mut self, p: u64, value: Complex64) -> Self {
        self.overrides.insert(p, value);
        self
    }

    pub fn overrides(&self) -> &BTreeMap<u64, Complex64> {
        &self.overrides
    }

    pub fn default_rule(&self) -> &DefaultCoefficient {
        &self.default
    }

    pub fn prime_value(&self, p: u64) -> Complex64 {
        if let Some(v) = self.overrides.get(&p) {
            return *v;
        }
        match &self.default {
            DefaultCoefficient::Constant(c) => *c,
            DefaultCoefficient::Character(chi) => chi.value(p),
        }
    }

    /// `a_n` can be read off without factoring `n`.
    fn direct(&self, n: u64) -> Option<Complex64> {
        if !self.overrides.is_empty() {
            return None;
        }
        match &self.default {
            DefaultCoefficient::Character(chi) => Some(chi.value(n)),
            DefaultCoefficient::Constant(c) if *c == Complex64::new(1.0, 0.0) => Some(*c),
            DefaultCoefficient::Constant(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExponentRule {
    /// `lambda_n = ln n`.
    Log,
    /// Explicit `lambda_p`; unlisted primes fall back to `ln p`.
    ExplicitPrimeExponents(BTreeMap<u64, f64>),
}

impl ExponentRule {
    pub fn prime_exponent(&self, p: u64) -> f64 {
        match self {
            ExponentRule::Log => (p as f64).ln(),
            ExponentRule::ExplicitPrimeExponents(map) => map.get(&p).copied().unwrap_or((p as f64).ln()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSpec {
    pub name: String,
    pub coefficients: PrimeCoefficientMap,
    pub exponents: ExponentRule,
    sigma_c_estimate: Option<f64>,
}

/// Diagnostics from [`SeriesSpec::abscissa_of_convergence`].
#[derive(Debug, Clone, PartialEq)]
pub struct AbscissaEstimate {
    /// Reported estimate of `sigma_c`.
    pub value: f64,
    /// `sup ln|A_n| / lambda_n` over the tail window, the literal limsup proxy.
    pub window_sup: f64,
    /// Least-squares slope of `ln|A_n|` against `lambda_n` over the window.
    pub slope: f64,
    /// No new record of `|A_n|` inside the tail window.
    pub bounded: bool,
    pub window: (u64, u64),
}

impl SeriesSpec {
    pub fn new(name: impl Into<String>, coefficients: PrimeCoefficientMap, exponents: ExponentRule) -> Self {
        SeriesSpec { name: name.into(), coefficients, exponents, sigma_c_estimate: None }
    }

    /// All `a_n = 1`, `lambda_n = ln n`.
    pub fn zeta() -> Self {
        Self::new("zeta", PrimeCoefficientMap::constant(Complex64::new(1.0, 0.0)), ExponentRule::Log)
    }

    pub fn dirichlet(chi: DirichletCharacter) -> Self {
        let name = format!("L:{}:{}", chi.modulus(), chi.index());
        Self::new(name, PrimeCoefficientMap::character(chi), ExponentRule::Log)
    }

    pub fn sigma_c_estimate(&self) -> Option<f64> {
        self.sigma_c_estimate
    }

    /// Attaches the estimate produced by [`Self::abscissa_of_convergence`].
    pub fn with_abscissa_estimate(mut self, n: u64) -> Result<Self> {
        let est = self.abscissa_of_convergence(n)?;
        self.sigma_c_estimate = Some(est.value);
        Ok(self)
    }

    pub fn coefficient(&self, n: u64) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::InvalidArgument("coefficient index must be >= 1".into()));
        }
        if let Some(v) = self.coefficients.direct(n) {
            return Ok(v);
        }
        let mut acc = Complex64::new(1.0, 0.0);
        for (p, alpha) in sieve().factorize(n)? {
            acc *= self.coefficients.prime_value(p).powu(alpha);
        }
        Ok(acc)
    }

    pub fn exponent(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("exponent index must be >= 1".into()));
        }
        match &self.exponents {
            ExponentRule::Log => Ok((n as f64).ln()),
            rule => Ok(sieve()
                .factorize(n)?
                .into_iter()
                .map(|(p, alpha)| alpha as f64 * rule.prime_exponent(p))
                .sum()),
        }
    }

    /// `(a_n, lambda_n)` for `n = 1..=n_max`, built by the recurrence
    /// `x_n = x_p x_{n/p}` over the smallest prime factor. Index 0 is unused.
    pub fn tables(&self, n_max: u64) -> Result<(Vec<Complex64>, Vec<f64>)> {
        let sv = sieve();
        if n_max > sv.bound() {
            return Err(Error::FactorizationBound { n: n_max, bound: sv.bound() });
        }
        let len = n_max as usize + 1;
        let mut a = vec![Complex64::new(0.0, 0.0); len];
        let mut lam = vec![0.0; len];
        if len > 1 {
            a[1] = Complex64::new(1.0, 0.0);
        }
        let log_rule = matches!(self.exponents, ExponentRule::Log);
        for n in 2..len {
            let p = sv.smallest_prime_factor(n as u64)? as usize;
            let rest = n / p;
            a[n] = match self.coefficients.direct(n as u64) {
                Some(v) => v,
                None => self.coefficients.prime_value(p as u64) * a[rest],
            };
            lam[n] = if log_rule { (n as f64).ln() } else { self.exponents.prime_exponent(p as u64) + lam[rest] };
        }
        Ok((a, lam))
    }

    /// `sum_{n<=N} a_n e^{-lambda_n s}`, ascending `n`, compensated.
    pub fn partial_sum(&self, s: Complex64, n_terms: u64) -> Result<Complex64> {
        if n_terms == 0 {
            return Err(Error::InvalidArgument("partial_sum needs N >= 1".into()));
        }
        if n_terms > STREAM_ABOVE {
            return self.partial_sum_streamed(s, n_terms);
        }
        let (a, lam) = self.tables(n_terms)?;
        Ok(sum_terms(&a, &lam, s, 1..=n_terms as usize, |_| true))
    }

    /// Large-`N` path without full tables: per-term factorisation in
    /// parallel chunks, merged in ascending order.
    fn partial_sum_streamed(&self, s: Complex64, n_terms: u64) -> Result<Complex64> {
        let bound = sieve().bound();
        if n_terms > bound {
            return Err(Error::FactorizationBound { n: n_terms, bound });
        }
        let starts: Vec<u64> = (1..=n_terms).step_by(STREAM_CHUNK as usize).collect();
        let parts: Vec<Result<Complex64>> = starts
            .par_iter()
            .map(|&lo| {
                let mut acc = ComplexSum::new();
                for n in lo..=(lo + STREAM_CHUNK - 1).min(n_terms) {
                    let a = self.coefficient(n)?;
                    if a != Complex64::new(0.0, 0.0) {
                        let lam = self.exponent(n)?;
                        acc.add(a * Complex64::from_polar((-lam * s.re).exp(), -lam * s.im));
                    }
                }
                Ok(acc.value())
            })
            .collect();
        let mut total = ComplexSum::new();
        for p in parts {
            total.add(p?);
        }
        Ok(total.value())
    }

    /// `prod_{p<=P} (1 - a_p e^{-lambda_p s})^{-1}`.
    pub fn euler_partial_product(&self, s: Complex64, prime_bound: u64) -> Result<Complex64> {
        let mut prod = Complex64::new(1.0, 0.0);
        for &p in sieve().primes_up_to(prime_bound)? {
            prod /= self.euler_factor(s, p as u64)?;
        }
        Ok(prod)
    }

    /// `1 - a_p e^{-lambda_p s}`, rejecting numerically vanishing values.
    pub fn euler_factor(&self, s: Complex64, p: u64) -> Result<Complex64> {
        let f = Complex64::new(1.0, 0.0) - self.coefficients.prime_value(p) * (-s * self.exponents.prime_exponent(p)).exp();
        let magnitude = f.norm();
        if magnitude < VANISHING_FACTOR_FLOOR {
            return Err(Error::VanishingFactor { p, magnitude });
        }
        Ok(f)
    }

    /// Estimates `sigma_c = limsup (1/lambda_n) ln|a_1 + ... + a_n|` from the
    /// tail window `n in [N/2, N]`.
    ///
    /// The reported value is the regression slope of `ln|A_n|` on `lambda_n`
    /// (removes the `O(1/lambda_n)` offset that biases the raw ratio), clamped
    /// at 0 and forced to 0 when the partial sums stop growing.
    pub fn abscissa_of_convergence(&self, n_max: u64) -> Result<AbscissaEstimate> {
        if n_max < 2 {
            return Err(Error::InvalidArgument("abscissa estimate needs N >= 2".into()));
        }
        let (a, lam) = self.tables(n_max)?;
        let lo = (n_max / 2).max(2);
        let mut acc = ComplexSum::new();
        let mut best_before = 0.0f64;
        let mut best_window = 0.0f64;
        let mut window_sup = f64::NEG_INFINITY;
        let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for n in 1..=n_max as usize {
            acc.add(a[n]);
            let mag = acc.value().norm();
            if (n as u64) < lo {
                best_before = best_before.max(mag);
                continue;
            }
            best_window = best_window.max(mag);
            if mag > 1e-300 && lam[n] > 0.0 {
                let y = mag.ln();
                let x = lam[n];
                window_sup = window_sup.max(y / x);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                cnt += 1.0;
            }
        }
        let denom = cnt * sxx - sx * sx;
        let slope = if cnt >= 2.0 && denom.abs() > 0.0 { (cnt * sxy - sx * sy) / denom } else { 0.0 };
        let bounded = best_window <= best_before;
        let value = if bounded { 0.0 } else { slope.max(0.0) };
        Ok(AbscissaEstimate { value, window_sup, slope, bounded, window: (lo, n_max) })
    }

    /// Parses the `key=value` series description.
    ///
    /// ```text
    /// kind=character        # zeta | character | custom
    /// modulus=5
    /// character_index=1
    /// default=1,0           # custom: a_p for unlisted primes
    /// exponent=explicit     # log | explicit
    /// lambda.2=1.0
    /// 7=0.5,-0.5            # a_7 override
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let kind = kv.get("kind").unwrap_or("custom");
        let mut spec = match kind {
            "zeta" => SeriesSpec::zeta(),
            "character" => {
                let q: u64 = kv.get_parsed("modulus")?.ok_or_else(|| Error::Parse("character kind needs modulus".into()))?;
                let idx: usize = kv.get_parsed("character_index")?.unwrap_or(0);
                let table = character_table(q)?;
                let chi = table
                    .get(idx)
                    .cloned()
                    .ok_or_else(|| Error::Parse(format!("character_index {idx} out of range for modulus {q}")))?;
                SeriesSpec::dirichlet(chi)
            }
            "custom" => {
                let default = match kv.get("default") {
                    Some(v) => parse_complex(v)?,
                    None => Complex64::new(1.0, 0.0),
                };
                SeriesSpec::new("custom", PrimeCoefficientMap::constant(default), ExponentRule::Log)
            }
            other => return Err(Error::Parse(format!("unknown series kind {other:?}"))),
        };
        let mut lambdas = BTreeMap::new();
        for (k, v) in kv.iter() {
            if let Some(p) = k.strip_prefix("lambda.") {
                let p = parse_prime(p)?;
                let val: f64 = v.parse().map_err(|_| Error::Parse(format!("bad exponent {v:?}")))?;
                if val < 0.0 {
                    return Err(Error::Parse(format!("lambda.{p} must be non-negative")));
                }
                lambdas.insert(p, val);
            } else if k.bytes().all(|b| b.is_ascii_digit()) {
                let p = parse_prime(k)?;
                spec.coefficients.overrides.insert(p, parse_complex(v)?);
            }
        }
        match kv.get("exponent").unwrap_or("log") {
            "log" => {
                if !lambdas.is_empty() {
                    return Err(Error::Parse("lambda.<p> lines need exponent=explicit".into()));
                }
            }
            "explicit" => spec.exponents = ExponentRule::ExplicitPrimeExponents(lambdas),
            other => return Err(Error::Parse(format!("unknown exponent rule {other:?}"))),
        }
        if let Some(name) = kv.get("name") {
            spec.name = name.to_string();
        }
        Ok(spec)
    }

    /// Inverse of [`Self::parse`] for specs built from characters or constants.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.coefficients.default {
            DefaultCoefficient::Character(chi) => {
                let _ = writeln!(out, "kind=character\nmodulus={}\ncharacter_index={}", chi.modulus(), chi.index());
            }
            DefaultCoefficient::Constant(c) => {
                let _ = writeln!(out, "kind=custom\ndefault={},{}", c.re, c.im);
            }
        }
        let _ = writeln!(out, "name={}", self.name);
        match &self.exponents {
            ExponentRule::Log => out.push_str("exponent=log\n"),
            ExponentRule::ExplicitPrimeExponents(map) => {
                out.push_str("exponent=explicit\n");
                for (p, l) in map {
                    let _ = writeln!(out, "lambda.{p}={l}");
                }
            }
        }
        for (p, v) in &self.coefficients.overrides {
            let _ = writeln!(out, "{p}={},{}", v.re, v.im);
        }
        out
    }
}

fn parse_prime(text: &str) -> Result<u64> {
    let p: u64 = text.parse().map_err(|_| Error::Parse(format!("bad prime {text:?}")))?;
    if !sieve().is_prime(p)? {
        return Err(Error::Parse(format!("{p} is not prime")));
    }
    Ok(p)
}

const STREAM_ABOVE: u64 = 1 << 20;
const STREAM_CHUNK: u64 = 1 << 16;

/// Compensated `sum a_n e^{-lambda_n s}` over the selected indices.
pub(crate) fn sum_terms(
    a: &[Complex64],
    lam: &[f64],
    s: Complex64,
    range: std::ops::RangeInclusive<usize>,
    keep: impl Fn(usize) -> bool,
) -> Complex64 {
    let mut acc = ComplexSum::new();
    for n in range {
        if keep(n) && a[n] != Complex64::new(0.0, 0.0) {
            acc.add(a[n] * Complex64::from_polar((-lam[n] * s.re).exp(), -lam[n] * s.im));
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn chi5_i() -> DirichletCharacter {
        character_table(5).unwrap().into_iter().find(|chi| chi.value(2) == c(0.0, 1.0)).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let l = SeriesSpec::dirichlet(chi5_i());
        assert_eq!(l.coefficient(3).unwrap(), c(0.0, -1.0));
        assert_eq!(l.coefficient(10).unwrap(), c(0.0, 0.0));
        assert_eq!(l.coefficient(1).unwrap(), c(1.0, 0.0));
        assert_eq!(SeriesSpec::zeta().coefficient(12).unwrap(), c(1.0, 0.0));
        assert!(SeriesSpec::zeta().coefficient(0).is_err());
        let odd = SeriesSpec::new("twos", PrimeCoefficientMap::constant(c(2.0, 0.0)), ExponentRule::Log);
        assert_eq!(odd.coefficient(12).unwrap(), c(8.0, 0.0));
        let big = SeriesSpec::new("b", PrimeCoefficientMap::constant(c(0.5, 0.0)), ExponentRule::Log);
        assert!(matches!(big.coefficient(20_000_000), Err(Error::FactorizationBound { .. })));
    }

    #[test]
    fn exponent_examples() {
        let z = SeriesSpec::zeta();
        let l12 = z.exponent(12).unwrap();
        assert_eq!(l12, 12f64.ln());
        assert!((l12 - (2.0 * z.exponent(2).unwrap() + z.exponent(3).unwrap())).abs() < 1e-15);
        assert_eq!(z.exponent(1).unwrap(), 0.0);
        let explicit = SeriesSpec::new(
            "ex",
            PrimeCoefficientMap::constant(c(1.0, 0.0)),
            ExponentRule::ExplicitPrimeExponents([(2, 1.0), (3, 1.7)].into_iter().collect()),
        );
        assert!((explicit.exponent(6).unwrap() - 2.7).abs() < 1e-15);
        let (_, lam) = explicit.tables(12).unwrap();
        assert!((lam[12] - 3.7).abs() < 1e-15);
    }

    #[test]
    fn partial_sum_examples() {
        // 10-term oracle written out longhand
        let direct: f64 = (1..=10).map(|n| 1.0 / (n * n) as f64).sum();
        let got = SeriesSpec::zeta().partial_sum(c(2.0, 0.0), 10).unwrap();
        assert!((got.re - 1.549768).abs() < 1e-6);
        assert!((got.re - direct).abs() < 1e-15);
        assert_eq!(SeriesSpec::dirichlet(chi5_i()).partial_sum(c(0.3, 7.0), 1).unwrap(), c(1.0, 0.0));
        let far = SeriesSpec::zeta().partial_sum(c(40.0, 5.0), 10_000).unwrap();
        assert!((far - 1.0).norm() <= 2.0 * 2f64.powi(-40));
    }

    #[test]
    fn euler_product_examples() {
        let z = SeriesSpec::zeta();
        let p3 = z.euler_partial_product(c(2.0, 0.0), 3).unwrap();
        assert!((p3 - c(1.5, 0.0)).norm() < 1e-15);
        assert_eq!(z.euler_partial_product(c(2.0, 0.0), 1).unwrap(), c(1.0, 0.0));
        // s = 0 makes the p=2 factor of zeta vanish
        assert!(matches!(z.euler_partial_product(c(0.0, 0.0), 5), Err(Error::VanishingFactor { p: 2, .. })));
    }

    #[test]
    fn euler_product_matches_sum_with_tail_estimate() {
        // partial sum to 10^6 plus the Euler-Maclaurin tail of n^{-3}
        let n = 1_000_000f64;
        let tail = 1.0 / (2.0 * n * n) - 1.0 / (2.0 * n * n * n);
        let sum = SeriesSpec::zeta().partial_sum(c(3.0, 0.0), 1_000_000).unwrap().re + tail;
        let prod = SeriesSpec::zeta().euler_partial_product(c(3.0, 0.0), 10_000).unwrap();
        assert!((prod.re - sum).abs() < 1e-8, "{} vs {}", prod.re, sum);
    }

    #[test]
    fn abscissa_examples() {
        let z = SeriesSpec::zeta().abscissa_of_convergence(100_000).unwrap();
        assert!((z.value - 1.0).abs() < 0.01, "{z:?}");
        let l = SeriesSpec::dirichlet(chi5_i()).abscissa_of_convergence(100_000).unwrap();
        assert!(l.value <= 0.02 && l.value >= 0.0, "{l:?}");
        assert!(l.bounded);
        // a_p = p gives a_n = n; brute-force partial sums grow like n^2/2
        let lin = SeriesSpec::new("n", PrimeCoefficientMap::constant(c(1.0, 0.0)), ExponentRule::Log);
        let mut lin = lin;
        for &p in sieve().primes_up_to(100_000).unwrap() {
            lin.coefficients = lin.coefficients.with_override(p as u64, c(p as f64, 0.0));
        }
        let est = lin.abscissa_of_convergence(100_000).unwrap();
        let brute: f64 = (1..=100_000u64).map(|k| k as f64).sum();
        assert!((brute.ln() / 100_000f64.ln() - est.window_sup).abs() < 1e-9);
        assert!((est.value - 2.0).abs() < 0.01, "{est:?}");
        let with = SeriesSpec::zeta().with_abscissa_estimate(1000).unwrap();
        assert!(with.sigma_c_estimate().is_some());
    }

    #[test]
    fn spec_text_round_trip() {
        let text = "kind=character\nmodulus=5\ncharacter_index=1\n";
        let spec = SeriesSpec::parse(text).unwrap();
        assert_eq!(spec.coefficient(2).unwrap(), c(0.0, 1.0));
        assert_eq!(SeriesSpec::parse(&spec.to_text()).unwrap(), spec);

        let custom = SeriesSpec::parse("kind=custom\nexponent=explicit\nlambda.2=1.0\nlambda.3=1.7\n7=0.5,-0.5\n").unwrap();
        assert!((custom.exponent(6).unwrap() - 2.7).abs() < 1e-15);
        assert_eq!(custom.coefficient(49).unwrap(), c(0.5, -0.5) * c(0.5, -0.5));
        assert_eq!(SeriesSpec::parse(&custom.to_text()).unwrap(), custom);
        assert!(SeriesSpec::parse("kind=custom\n4=1,0\n").is_err());
        assert!(SeriesSpec::parse("kind=weird\n").is_err());
    }
}
