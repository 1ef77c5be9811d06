//! Integer arithmetic: smallest-prime-factor sieve, factorization,
//! primes, and a few modular helpers.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const DEFAULT_SIEVE_BOUND: u64 = 10_000_000;

/// Smallest-prime-factor table up to a fixed bound. Immutable once built.
#[derive(Debug)]
pub struct Sieve {
    spf: Vec<u32>,
    primes: Vec<u32>,
}

static DEFAULT_SIEVE: OnceLock<Sieve> = OnceLock::new();

/// Process-wide sieve with [`DEFAULT_SIEVE_BOUND`], built on first use.
pub fn sieve() -> &'static Sieve {
    DEFAULT_SIEVE.get_or_init(|| Sieve::new(DEFAULT_SIEVE_BOUND))
}

impl Sieve {
    /// Linear sieve over `[0, bound]`.
    pub fn new(bound: u64) -> Self {
        let n = bound.max(2) as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let m = i * p as usize;
                if p > si || m > n {
                    break;
                }
                spf[m] = p;
            }
        }
        Sieve { spf, primes }
    }

    pub fn bound(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    fn check(&self, n: u64) -> Result<()> {
        if n > self.bound() {
            Err(Error::FactorizationBound { n, bound: self.bound() })
        } else {
            Ok(())
        }
    }

    /// Smallest prime factor of `n >= 2`.
    pub fn smallest_prime_factor(&self, n: u64) -> Result<u64> {
        self.check(n)?;
        Ok(self.spf[n as usize] as u64)
    }

    pub fn is_prime(&self, n: u64) -> Result<bool> {
        self.check(n)?;
        Ok(n >= 2 && self.spf[n as usize] as u64 == n)
    }

    /// Prime factorization as `(p, alpha)` pairs in increasing `p`; empty for `n = 1`.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        self.check(n)?;
        let mut out: Vec<(u64, u32)> = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m] as u64;
            match out.last_mut() {
                Some((q, a)) if *q == p => *a += 1,
                _ => out.push((p, 1)),
            }
            m /= p as usize;
        }
        Ok(out)
    }

    /// All primes `p <= limit`.
    pub fn primes_up_to(&self, limit: u64) -> Result<&[u32]> {
        self.check(limit)?;
        let end = self.primes.partition_point(|&p| p as u64 <= limit);
        Ok(&self.primes[..end])
    }

    /// The first `k` primes.
    pub fn first_primes(&self, k: usize) -> Result<&[u32]> {
        if k > self.primes.len() {
            return Err(Error::FactorizationBound { n: k as u64, bound: self.primes.len() as u64 });
        }
        Ok(&self.primes[..k])
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let mut acc: u128 = 1;
    let mut b = (base % modulus) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Trial-division factorization for small moduli (independent of the sieve bound).
pub fn factor_small(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut a = 0;
            while n % p == 0 {
                n /= p;
                a += 1;
            }
            out.push((p, a));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factor_small(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Smallest generator of `(Z/qZ)^*`, if the group is cyclic.
pub fn primitive_root(q: u64) -> Option<u64> {
    if q == 1 || q == 2 {
        return Some(1);
    }
    if q == 4 {
        return Some(3);
    }
    let phi = euler_phi(q);
    let phi_primes: Vec<u64> = factor_small(phi).into_iter().map(|(p, _)| p).collect();
    (2..q).find(|&g| gcd(g, q) == 1 && phi_primes.iter().all(|&r| pow_mod(g, phi / r, q) != 1))
}
