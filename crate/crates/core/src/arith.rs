//! Elementary arithmetic: factorization, Möbius, Euler phi, divisors and the
//! `(a, b^∞)` coprime-power decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prime factorization of a positive integer, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Reconstructs the factored integer.
    pub fn value(&self) -> u64 {
        self.factors.iter().map(|&(p, e)| p.pow(e)).product()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }
}

/// Trial-division factorization of `1 <= n <= 2^63 - 1`.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Domain("cannot factor 0".into()));
    }
    if n > i64::MAX as u64 {
        return Err(Error::Domain(format!("{n} exceeds 63 bits")));
    }
    let mut factors = Vec::new();
    let mut m = n;
    let mut push = |p: u64, m: &mut u64| {
        let mut e = 0;
        while *m % p == 0 {
            *m /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    push(2, &mut m);
    push(3, &mut m);
    let mut p = 5u64;
    while p.saturating_mul(p) <= m {
        push(p, &mut m);
        push(p + 2, &mut m);
        p += 6;
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Ok(Factorization { factors })
}

fn factors_of(n: u64) -> Factorization {
    factorize(n).expect("positive argument")
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_i(a: i64, b: i64) -> u64 {
    gcd(a.unsigned_abs(), b.unsigned_abs())
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

/// Reduces `a` into `[0, m)`.
#[inline]
pub fn rem(a: i64, m: u64) -> u64 {
    let m = m as i128;
    ((a as i128 % m + m) % m) as u64
}

/// Inverse of `a` modulo `m` by the extended Euclidean algorithm; `None` if
/// `gcd(a, m) > 1`. Modulo 1 every integer inverts to 0.
pub fn mod_inverse(a: i64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, rem(a, m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    let m = m as i128;
    Some(((s0 % m + m) % m) as u64)
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn mobius(n: u64) -> i64 {
    let f = factors_of(n);
    if !f.is_squarefree() {
        return 0;
    }
    if f.factors.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn euler_phi(n: u64) -> u64 {
    factors_of(n)
        .factors
        .iter()
        .map(|&(p, e)| (p - 1) * p.pow(e - 1))
        .product()
}

/// Number of primitive characters modulo `n`, i.e. `Σ_{d|n} μ(n/d) φ(d)`.
pub fn primitive_count(n: u64) -> u64 {
    factors_of(n)
        .factors
        .iter()
        .map(|&(p, e)| match e {
            1 => p - 2,
            _ => (p - 1) * (p - 1) * p.pow(e - 2),
        })
        .product()
}

/// Divisors of `n` in ascending order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for &(p, e) in factors_of(n).factors.iter() {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn divisor_count(n: u64) -> u64 {
    factors_of(n).factors.iter().map(|&(_, e)| e as u64 + 1).product()
}

/// `σ_{-1}(n) = Σ_{d|n} 1/d`.
pub fn sigma_minus_one(n: u64) -> f64 {
    divisors(n).iter().map(|&d| 1.0 / d as f64).sum()
}

/// Largest divisor of `a` composed only of primes dividing `b`, i.e. `(a, b^∞)`.
pub fn coprime_power_part(a: u64, b: u64) -> u64 {
    let mut out = 1;
    for &(p, e) in factors_of(a).factors.iter() {
        if b % p == 0 {
            out *= p.pow(e);
        }
    }
    out
}

/// `(a, b^∞) / (a, b)`.
pub fn star_quotient(a: u64, b: u64) -> u64 {
    coprime_power_part(a, b) / gcd(a, b)
}

/// True if every prime factor of `a` divides `b`.
pub fn divides_power_of(a: u64, b: u64) -> bool {
    coprime_power_part(a, b) == a
}

/// Smallest primitive root modulo an odd prime power or 2, 4.
pub fn primitive_root_prime_power(p: u64, e: u32) -> u64 {
    if p == 2 {
        return if e <= 2 { e as u64 * 2 - 1 } else { 5 };
    }
    let phi_p = p - 1;
    let fac = factors_of(phi_p);
    let mut g = 2;
    loop {
        if fac.primes().all(|r| pow_mod(g, phi_p / r, p) != 1) {
            break;
        }
        g += 1;
    }
    if e >= 2 && pow_mod(g, p - 1, p * p) == 1 {
        g += p;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_examples() {
        assert!(factorize(1).unwrap().factors().is_empty());
        assert_eq!(factorize(12).unwrap().factors(), &[(2, 2), (3, 1)]);
        assert_eq!(factorize(997).unwrap().factors(), &[(997, 1)]);
        assert!(factorize(0).is_err());
        assert!(factorize(u64::MAX).is_err());
        let big = (1u64 << 61) - 1;
        assert_eq!(factorize(big).unwrap().factors(), &[(big, 1)]);
    }

    #[test]
    fn arithmetic_function_examples() {
        assert_eq!((mobius(12), euler_phi(12)), (0, 4));
        assert_eq!((mobius(30), euler_phi(30)), (-1, 8));
        assert_eq!(divisors(6), vec![1, 2, 3, 6]);
        assert_eq!(mobius(1), 1);
        assert_eq!(euler_phi(1), 1);
    }

    #[test]
    fn coprime_power_examples() {
        assert_eq!(coprime_power_part(12, 10), 4);
        for a in 1..50 {
            assert_eq!(coprime_power_part(a, 1), 1);
        }
        assert_eq!(coprime_power_part(45, 6), 9);
        assert_eq!(star_quotient(45, 6), 3);
    }

    #[test]
    fn factorization_reconstructs_exhaustively() {
        for n in 1..=1_000_000u64 {
            let f = factorize(n).unwrap();
            assert_eq!(f.value(), n);
            assert!(f.factors().windows(2).all(|w| w[0].0 < w[1].0));
            assert!(f.factors().iter().all(|&(_, e)| e >= 1));
        }
    }

    #[test]
    fn mobius_sums_vanish() {
        for n in 1..=10_000u64 {
            let s: i64 = divisors(n).iter().map(|&d| mobius(d)).sum();
            assert_eq!(s, (n == 1) as i64);
        }
    }

    #[test]
    fn coprime_power_split_is_exact() {
        for a in 1..=1000u64 {
            for b in 1..=1000u64 {
                let s = coprime_power_part(a, b);
                assert_eq!(a % s, 0);
                assert_eq!(gcd(a / s, b), 1);
            }
        }
    }

    #[test]
    fn inverses_and_primitive_counts() {
        for m in 1..200u64 {
            for a in -50..50i64 {
                match mod_inverse(a, m) {
                    Some(x) if m > 1 => assert_eq!(mul_mod(rem(a, m), x, m), 1),
                    Some(_) => {}
                    None => assert!(gcd_i(a, m as i64) > 1),
                }
            }
            let brute: i64 = divisors(m)
                .iter()
                .map(|&d| mobius(m / d) * euler_phi(d) as i64)
                .sum();
            assert_eq!(primitive_count(m) as i64, brute);
        }
    }
}
