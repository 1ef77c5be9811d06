//! Dirichlet characters on moduli with a cyclic unit group (plus q = 8).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::arith::{euler_phi, factor_small, gcd, primitive_root};
use crate::error::{Error, Result};

pub const MAX_CHARACTER_MODULUS: u64 = 1_000_000;

/// `e^{2 pi i k / n}`, exact at quarter turns.
pub fn root_of_unity(k: u64, n: u64) -> Complex64 {
    let k = k % n;
    if (4 * k) % n == 0 {
        return match 4 * k / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let theta = 2.0 * PI * k as f64 / n as f64;
    Complex64::new(theta.cos(), theta.sin())
}

#[derive(Clone, PartialEq)]
pub struct DirichletCharacter {
    modulus: u64,
    index: usize,
    values: Vec<Complex64>,
}

impl fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DirichletCharacter(mod {}, #{})", self.modulus, self.index)
    }
}

impl DirichletCharacter {
    /// Builds a character from its residue table. Validates the defining
    /// properties: zero exactly off the unit group, `chi(1) = 1`, multiplicativity.
    pub fn from_values(modulus: u64, index: usize, values: Vec<Complex64>) -> Result<Self> {
        if modulus == 0 || values.len() as u64 != modulus {
            return Err(Error::InvalidArgument(format!(
                "character table for modulus {modulus} needs {modulus} entries"
            )));
        }
        let chi = DirichletCharacter { modulus, index, values };
        let q = modulus;
        for n in 0..q {
            let v = chi.values[n as usize];
            let unit = gcd(n, q) == 1;
            if unit != (v.norm() > 0.5) {
                return Err(Error::InvalidArgument(format!("chi({n}) inconsistent with gcd({n},{q})")));
            }
        }
        if (chi.value(1) - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidArgument("chi(1) must be 1".into()));
        }
        for m in 0..q {
            for n in 0..q {
                let lhs = chi.value(m * n);
                let rhs = chi.value(m) * chi.value(n);
                if (lhs - rhs).norm() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("chi not multiplicative at {m}*{n}")));
                }
            }
        }
        Ok(chi)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Position in [`character_table`] order.
    pub fn index(&self) -> usize {
        self.index
    }

    #[inline]
    pub fn value(&self, n: u64) -> Complex64 {
        self.values[(n % self.modulus) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn conj(&self) -> DirichletCharacter {
        let values: Vec<Complex64> = self.values.iter().map(|v| v.conj()).collect();
        // the conjugate sits at index phi - j in cyclic tables
        let phi = euler_phi(self.modulus) as usize;
        let index = if self.index == 0 { 0 } else { phi - self.index };
        DirichletCharacter { modulus: self.modulus, index, values }
    }

    pub fn is_principal(&self) -> bool {
        (1..self.modulus).all(|n| gcd(n, self.modulus) > 1 || (self.value(n) - 1.0).norm() < 1e-12)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im.abs() < 1e-12)
    }

    /// 0 for even characters, 1 for odd ones.
    pub fn parity(&self) -> u32 {
        if self.modulus <= 2 {
            return 0;
        }
        if self.value(self.modulus - 1).re < 0.0 {
            1
        } else {
            0
        }
    }

    /// Smallest `d | q` such that `chi` is trivial on units congruent to 1 mod d.
    pub fn conductor(&self) -> u64 {
        let q = self.modulus;
        let mut divisors: Vec<u64> = (1..=q).filter(|d| q % d == 0).collect();
        divisors.sort_unstable();
        for d in divisors {
            let trivial = (1..=q)
                .filter(|&n| gcd(n, q) == 1 && n % d == 1 % d)
                .all(|n| (self.value(n) - 1.0).norm() < 1e-9);
            if trivial {
                return d;
            }
        }
        q
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus
    }

    /// `tau(chi) = sum_{a=1}^{q} chi(a) e^{2 pi i a / q}`.
    pub fn gauss_sum(&self) -> Complex64 {
        let q = self.modulus;
        (1..=q).map(|a| self.value(a) * root_of_unity(a, q)).sum()
    }

    /// Prime divisors of the modulus.
    pub fn modulus_primes(&self) -> Vec<u64> {
        factor_small(self.modulus).into_iter().map(|(p, _)| p).collect()
    }
}

fn unit_group_is_cyclic(q: u64) -> bool {
    if q <= 4 {
        return true;
    }
    let f = factor_small(q);
    match f.as_slice() {
        [(p, _)] if *p != 2 => true,
        [(2, 1), (p, _)] if *p != 2 => true,
        _ => false,
    }
}

/// All `phi(q)` characters modulo `q`, ordered by the angle of `chi(g)` for the
/// smallest primitive root `g` (index `j` has `chi(g) = e^{2 pi i j / phi(q)}`).
pub fn character_table(q: u64) -> Result<Vec<DirichletCharacter>> {
    if q == 0 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    if q > MAX_CHARACTER_MODULUS {
        return Err(Error::ModulusTooLarge { q, bound: MAX_CHARACTER_MODULUS });
    }
    if q == 8 {
        return mod_eight_table();
    }
    if !unit_group_is_cyclic(q) {
        return Err(Error::UnsupportedModulus(q));
    }
    let phi = euler_phi(q);
    let g = primitive_root(q).ok_or(Error::UnsupportedModulus(q))?;
    // discrete log table
    let mut dlog = vec![u64::MAX; q as usize];
    let mut x = 1 % q;
    for m in 0..phi {
        dlog[x as usize] = m;
        x = x * g % q;
    }
    if q == 1 {
        dlog[0] = 0;
    }
    let mut table = Vec::with_capacity(phi as usize);
    for j in 0..phi {
        let values = (0..q)
            .map(|n| {
                let m = dlog[n as usize];
                if m == u64::MAX {
                    Complex64::new(0.0, 0.0)
                } else {
                    root_of_unity(j * m, phi)
                }
            })
            .collect();
        table.push(DirichletCharacter::from_values(q, j as usize, values)?);
    }
    Ok(table)
}

fn mod_eight_table() -> Result<Vec<DirichletCharacter>> {
    // (Z/8)^* = <3> x <5>; rows list chi(3), chi(5)
    let signs = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];
    signs
        .iter()
        .enumerate()
        .map(|(idx, &(c3, c5))| {
            let mut values = vec![Complex64::new(0.0, 0.0); 8];
            values[1] = Complex64::new(1.0, 0.0);
            values[3] = Complex64::new(c3, 0.0);
            values[5] = Complex64::new(c5, 0.0);
            values[7] = Complex64::new(c3 * c5, 0.0);
            DirichletCharacter::from_values(8, idx, values)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mod_five_has_one_character_with_chi2_i() {
        let table = character_table(5).unwrap();
        assert_eq!(table.len(), 4);
        let hits: Vec<_> = table.iter().filter(|chi| chi.value(2) == c(0.0, 1.0)).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].value(3), c(0.0, -1.0));
        assert_eq!(hits[0].value(10), c(0.0, 0.0));
        assert_eq!(hits[0].index(), 1);
        assert!(table[0].is_principal());
        assert!(table[1..].iter().all(|chi| chi.is_primitive()));
        assert_eq!(table[1].conj(), table[3]);
    }

    #[test]
    fn trivial_modulus() {
        let table = character_table(1).unwrap();
        assert_eq!(table.len(), 1);
        for n in 1..50 {
            assert_eq!(table[0].value(n), c(1.0, 0.0));
        }
    }

    /// Brute force: every multiplicative map (Z/4)^* -> roots of unity.
    #[test]
    fn mod_four_against_enumeration() {
        let table = character_table(4).unwrap();
        assert_eq!(table.len(), 2);
        let mut found = Vec::new();
        for v3 in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            // 3*3 = 9 = 1 mod 4 forces v3^2 = 1
            if (v3 * v3 - 1.0).norm() < 1e-12 {
                found.push(v3);
            }
        }
        assert_eq!(found.len(), 2);
        let non_principal: Vec<_> = table.iter().filter(|chi| !chi.is_principal()).collect();
        assert_eq!(non_principal.len(), 1);
        assert_eq!(non_principal[0].value(3), c(-1.0, 0.0));
        assert_eq!(non_principal[0].parity(), 1);
    }

    #[test]
    fn mod_eight_and_unsupported() {
        let table = character_table(8).unwrap();
        assert_eq!(table.len(), 4);
        assert!(matches!(character_table(15), Err(Error::UnsupportedModulus(15))));
        assert!(matches!(character_table(12), Err(Error::UnsupportedModulus(12))));
        assert!(character_table(2 * 49).is_ok());
    }

    #[test]
    fn gauss_sum_has_modulus_sqrt_q_for_primitive() {
        for q in [5u64, 7, 9, 13] {
            for chi in character_table(q).unwrap() {
                if chi.is_primitive() {
                    assert!((chi.gauss_sum().norm() - (q as f64).sqrt()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn values_are_roots_of_unity_of_order_dividing_phi() {
        for q in [7u64, 9, 11, 25, 8] {
            let phi = euler_phi(q) as i32;
            for chi in character_table(q).unwrap() {
                for n in 1..q {
                    if gcd(n, q) == 1 {
                        assert!((chi.value(n).powi(phi) - 1.0).norm() < 1e-10);
                    }
                }
            }
        }
    }
}
