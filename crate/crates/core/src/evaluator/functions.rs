//! The built-in evaluable functions.

use std::sync::Arc;

use num_complex::Complex64;

use super::fe::FunctionalEquationForm;
use super::hurwitz::{hurwitz_zeta, EvaluationParams};
use super::{AnalyticFunction, EvaluationResult};
use crate::character::{character_table, DirichletCharacter};
use crate::error::{Error, Result};
use crate::series::{sum_terms, SeriesSpec};
use crate::sum::ComplexSum;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Mixing constant of the Davenport-Heilbronn combination,
/// `(sqrt(10 - 2 sqrt 5) - 2) / (sqrt 5 - 1)`.
pub fn davenport_heilbronn_kappa() -> f64 {
    let r5 = 5f64.sqrt();
    ((10.0 - 2.0 * r5).sqrt() - 2.0) / (r5 - 1.0)
}

/// `sum_n w(n mod q) n^{-s} = q^{-s} sum_{a=1}^{q} w(a) zeta(s, a/q)`.
fn periodic_series(s: Complex64, weights: &[Complex64], params: &EvaluationParams) -> Result<EvaluationResult> {
    let q = weights.len();
    let lq = (q as f64).ln();
    let scale = Complex64::from_polar((-s.re * lq).exp(), -s.im * lq);
    let mut h = ComplexSum::new();
    let mut dh = ComplexSum::new();
    let mut err = 0.0;
    let mut terms = 0;
    for (a, w) in weights.iter().enumerate().skip(1).chain(std::iter::once((q, &weights[0]))) {
        if *w == Complex64::new(0.0, 0.0) {
            continue;
        }
        let v = hurwitz_zeta(s, a as f64 / q as f64, params)?;
        h.add(v.value * w);
        dh.add(v.derivative * w);
        err += v.error_bound * w.norm();
        terms += v.terms;
    }
    let h = h.value();
    Ok(EvaluationResult {
        value: scale * h,
        derivative: Some(scale * (dh.value() - h * lq)),
        error_bound: err * scale.norm(),
        terms_used: terms,
        truncation_only: false,
    })
}

/// Entire periodic series near `s = 1`: the Hurwitz pole terms cancel only
/// in exact arithmetic, so average over a small circle instead.
fn periodic_series_entire(s: Complex64, weights: &[Complex64], params: &EvaluationParams) -> Result<EvaluationResult> {
    if (s - 1.0).norm() >= 1e-6 {
        return periodic_series(s, weights, params);
    }
    let nodes = 16;
    let r = 1e-4;
    let mut val = ComplexSum::new();
    let mut der = ComplexSum::new();
    let mut terms = 0;
    for k in 0..nodes {
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / nodes as f64);
        let e = periodic_series(s + w * r, weights, params)?;
        val.add(e.value);
        der.add(e.value / w);
        terms += e.terms_used;
    }
    Ok(EvaluationResult {
        value: val.value() / nodes as f64,
        derivative: Some(der.value() / (nodes as f64 * r)),
        error_bound: 0.0,
        terms_used: terms,
        truncation_only: false,
    })
}

#[derive(Debug, Clone)]
pub struct RiemannZeta {
    params: EvaluationParams,
    fe: FunctionalEquationForm,
    poles: [Complex64; 1],
    spec: SeriesSpec,
}

impl RiemannZeta {
    pub fn new(params: EvaluationParams) -> Self {
        RiemannZeta { params, fe: FunctionalEquationForm::riemann(), poles: [ONE], spec: SeriesSpec::zeta() }
    }
}

impl AnalyticFunction for RiemannZeta {
    fn descriptor(&self) -> String {
        "zeta".into()
    }

    fn evaluate_direct(&self, s: Complex64) -> Result<EvaluationResult> {
        let v = hurwitz_zeta(s, 1.0, &self.params)?;
        Ok(EvaluationResult {
            value: v.value,
            derivative: Some(v.derivative),
            error_bound: v.error_bound,
            terms_used: v.terms,
            truncation_only: false,
        })
    }

    fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    fn functional_equation(&self) -> Option<&FunctionalEquationForm> {
        Some(&self.fe)
    }

    fn has_real_coefficients(&self) -> bool {
        true
    }

    fn series(&self) -> Option<&SeriesSpec> {
        Some(&self.spec)
    }
}

/// `zeta(s, a)`; only `a = 1` carries a functional equation.
#[derive(Debug, Clone)]
pub struct HurwitzZeta {
    a: f64,
    params: EvaluationParams,
    fe: Option<FunctionalEquationForm>,
    poles: [Complex64; 1],
}

impl HurwitzZeta {
    pub fn new(a: f64, params: EvaluationParams) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidArgument(format!("Hurwitz parameter a={a} outside (0,1]")));
        }
        let fe = (a == 1.0).then(FunctionalEquationForm::riemann);
        Ok(HurwitzZeta { a, params, fe, poles: [ONE] })
    }
}

impl AnalyticFunction for HurwitzZeta {
    fn descriptor(&self) -> String {
        format!("hurwitz:{}", self.a)
    }

    fn evaluate_direct(&self, s: Complex64) -> Result<EvaluationResult> {
        let v = hurwitz_zeta(s, self.a, &self.params)?;
        Ok(EvaluationResult {
            value: v.value,
            derivative: Some(v.derivative),
            error_bound: v.error_bound,
            terms_used: v.terms,
            truncation_only: false,
        })
    }

    fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    fn functional_equation(&self) -> Option<&FunctionalEquationForm> {
        self.fe.as_ref()
    }

    fn has_real_coefficients(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub struct DirichletL {
    chi: DirichletCharacter,
    weights: Vec<Complex64>,
    params: EvaluationParams,
    fe: Option<FunctionalEquationForm>,
    poles: Vec<Complex64>,
    spec: SeriesSpec,
}

impl DirichletL {
    pub fn new(chi: DirichletCharacter, params: EvaluationParams) -> Self {
        let fe = FunctionalEquationForm::for_character(&chi);
        let poles = if chi.is_principal() { vec![ONE] } else { vec![] };
        let weights = chi.values().to_vec();
        let spec = SeriesSpec::dirichlet(chi.clone());
        DirichletL { chi, weights, params, fe, poles, spec }
    }

    pub fn character(&self) -> &DirichletCharacter {
        &self.chi
    }
}

impl AnalyticFunction for DirichletL {
    fn descriptor(&self) -> String {
        format!("L:{}:{}", self.chi.modulus(), self.chi.index())
    }

    fn evaluate_direct(&self, s: Complex64) -> Result<EvaluationResult> {
        if self.poles.is_empty() {
            periodic_series_entire(s, &self.weights, &self.params)
        } else {
            periodic_series(s, &self.weights, &self.params)
        }
    }

    fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    fn functional_equation(&self) -> Option<&FunctionalEquationForm> {
        self.fe.as_ref()
    }

    fn has_real_coefficients(&self) -> bool {
        self.chi.is_real()
    }

    fn series(&self) -> Option<&SeriesSpec> {
        Some(&self.spec)
    }
}

/// `((1 - i kappa)/2) L(s, chi) + ((1 + i kappa)/2) L(s, conj chi)` with
/// `chi` the character mod 5 having `chi(2) = i`. The coefficients
/// `Re chi(n) + kappa Im chi(n)` are real and 5-periodic.
#[derive(Debug, Clone)]
pub struct DavenportHeilbronn {
    kappa: f64,
    weights: Vec<Complex64>,
    params: EvaluationParams,
    fe: FunctionalEquationForm,
}

impl DavenportHeilbronn {
    pub fn new(params: EvaluationParams) -> Self {
        let chi = character_table(5)
            .expect("modulus 5 is cyclic")
            .into_iter()
            .find(|chi| chi.value(2) == Complex64::i())
            .expect("a character with chi(2) = i exists mod 5");
        let kappa = davenport_heilbronn_kappa();
        let c1 = Complex64::new(0.5, -0.5 * kappa);
        let c2 = c1.conj();
        let weights = chi.values().iter().map(|v| c1 * v + c2 * v.conj()).collect();
        // odd, conductor 5, root number 1
        let fe = FunctionalEquationForm::completed(5, 1, ONE);
        DavenportHeilbronn { kappa, weights, params, fe }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `a_1..a_5` of the combined series.
    pub fn residue_coefficients(&self) -> &[Complex64] {
        &self.weights
    }
}

impl AnalyticFunction for DavenportHeilbronn {
    fn descriptor(&self) -> String {
        "dh".into()
    }

    fn evaluate_direct(&self, s: Complex64) -> Result<EvaluationResult> {
        periodic_series_entire(s, &self.weights, &self.params)
    }

    fn functional_equation(&self) -> Option<&FunctionalEquationForm> {
        Some(&self.fe)
    }

    fn has_real_coefficients(&self) -> bool {
        true
    }
}

/// A general series cut at `N` terms. Not analytically continued: results
/// left of `sigma_c + margin` carry `truncation_only`.
#[derive(Debug, Clone)]
pub struct TruncatedGeneral {
    spec: SeriesSpec,
    terms: u64,
    sigma_c: f64,
    tables: Arc<(Vec<Complex64>, Vec<f64>)>,
}

pub const TRUNCATION_MARGIN: f64 = 0.5;

impl TruncatedGeneral {
    pub fn new(spec: SeriesSpec, terms: u64) -> Result<Self> {
        if terms == 0 {
            return Err(Error::InvalidArgument("truncated series needs N >= 1".into()));
        }
        let sigma_c = match spec.sigma_c_estimate() {
            Some(v) => v,
            None if terms >= 2 => spec.abscissa_of_convergence(terms)?.value,
            None => 0.0,
        };
        let tables = Arc::new(spec.tables(terms)?);
        Ok(TruncatedGeneral { spec, terms, sigma_c, tables })
    }

    pub fn spec(&self) -> &SeriesSpec {
        &self.spec
    }
}

impl AnalyticFunction for TruncatedGeneral {
    fn descriptor(&self) -> String {
        format!("series:{}:{}", self.spec.name, self.terms)
    }

    fn evaluate_direct(&self, s: Complex64) -> Result<EvaluationResult> {
        let (a, lam) = &*self.tables;
        let n = self.terms as usize;
        let value = sum_terms(a, lam, s, 1..=n, |_| true);
        let weighted: Vec<Complex64> = a.iter().zip(lam).map(|(c, l)| -c * l).collect();
        let derivative = sum_terms(&weighted, lam, s, 1..=n, |_| true);
        Ok(EvaluationResult {
            value,
            derivative: Some(derivative),
            error_bound: 0.0,
            terms_used: n,
            truncation_only: s.re <= self.sigma_c + TRUNCATION_MARGIN,
        })
    }

    fn has_real_coefficients(&self) -> bool {
        let (a, _) = &*self.tables;
        a.iter().all(|c| c.im == 0.0)
    }

    fn series(&self) -> Option<&SeriesSpec> {
        Some(&self.spec)
    }
}
