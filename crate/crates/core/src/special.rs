//! Complex special functions needed by the functional-equation factors:
//! log-gamma, digamma and overflow-free `ln sin(pi z)`.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Even-index Bernoulli numbers B_2, B_4, ..., B_40.
pub const BERNOULLI_EVEN: [f64; 20] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
    -7709321041217.0 / 510.0,
    2577687858367.0 / 6.0,
    -26315271553053477373.0 / 1919190.0,
    2929993913841559.0 / 6.0,
    -261082718496449122051.0 / 13530.0,
];

const STIRLING_SHIFT: f64 = 15.0;
const STIRLING_TERMS: usize = 10;

fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `ln sin(pi z)` on a branch continuous in `z` away from the real axis.
/// Avoids the `e^{pi |Im z|}` overflow of the direct formula.
pub fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im.abs() < 20.0 {
        return (z * PI).sin().ln();
    }
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    // sin(pi z) = e^{-i pi z} (1 - e^{2 i pi z}) (i/2)
    let i = Complex64::i();
    let small = (i * 2.0 * PI * z).exp();
    -i * PI * z + (Complex64::new(1.0, 0.0) - small).ln() + (i * 0.5).ln()
}

/// `cot(pi z)` evaluated through the bounded exponential.
pub fn cot_pi(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let one = cplx(1.0, 0.0);
    if z.im >= 0.0 {
        let e = (i * 2.0 * PI * z).exp();
        i * (e + one) / (e - one)
    } else {
        let e = (-i * 2.0 * PI * z).exp();
        i * (one + e) / (one - e)
    }
}

/// Log-gamma: `exp(ln_gamma(z)) = Gamma(z)`. The imaginary part follows the
/// recurrence/reflection branch and is only meaningful modulo `2 pi`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        return cplx(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(cplx(1.0, 0.0) - z);
    }
    let mut shift = cplx(0.0, 0.0);
    let mut w = z;
    while w.re < STIRLING_SHIFT {
        shift += w.ln();
        w += 1.0;
    }
    stirling_ln_gamma(w) - shift
}

fn stirling_ln_gamma(w: Complex64) -> Complex64 {
    let half_ln_two_pi = 0.5 * (2.0 * PI).ln();
    let mut acc = (w - 0.5) * w.ln() - w + half_ln_two_pi;
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut power = inv;
    for k in 1..=STIRLING_TERMS {
        let b = BERNOULLI_EVEN[k - 1];
        let kk = k as f64;
        acc += power * (b / (2.0 * kk * (2.0 * kk - 1.0)));
        power *= inv2;
    }
    acc
}

/// Digamma `psi(z) = Gamma'(z)/Gamma(z)`.
pub fn digamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // psi(1 - z) - psi(z) = pi cot(pi z)
        return digamma(cplx(1.0, 0.0) - z) - cot_pi(z) * PI;
    }
    let mut shift = cplx(0.0, 0.0);
    let mut w = z;
    while w.re < STIRLING_SHIFT {
        shift += w.inv();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut acc = w.ln() - inv * 0.5;
    let mut power = inv2;
    for k in 1..=STIRLING_TERMS {
        let b = BERNOULLI_EVEN[k - 1];
        acc -= power * (b / (2.0 * k as f64));
        power *= inv2;
    }
    acc - shift
}
