//! Dirichlet characters as exact root-of-unity tables.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::arith::{self, gcd, lcm, mod_inverse, rem};
use crate::error::{Error, Result};

/// Marker for a zero value in an index table.
pub const ZERO: u32 = u32::MAX;

/// Generator data of `(Z/qZ)^×`, shared by every character of one modulus.
#[derive(Debug)]
struct Group {
    modulus: u64,
    gens: Vec<(u64, u32)>,
    exponent: u32,
    logs: Vec<Option<Box<[u32]>>>,
}

impl Group {
    fn build(q: u64) -> Group {
        let mut gens = Vec::new();
        for &(p, e) in arith::factorize(q).expect("q >= 1").factors() {
            let pe = p.pow(e);
            let lift = |g: u64| crt_pair(g, pe, 1, q / pe);
            if p == 2 {
                if e >= 2 {
                    gens.push((lift(pe - 1), 2));
                }
                if e >= 3 {
                    gens.push((lift(5), 1 << (e - 2)));
                }
            } else {
                let g = arith::primitive_root_prime_power(p, e);
                gens.push((lift(g % pe), ((p - 1) * p.pow(e - 1)) as u32));
            }
        }
        let exponent = gens.iter().fold(1u64, |acc, &(_, o)| lcm(acc, o as u64)) as u32;
        let mut logs: Vec<Option<Box<[u32]>>> = vec![None; q as usize];
        let mut exps = vec![0u32; gens.len()];
        loop {
            let mut x = 1 % q;
            for (j, &(g, _)) in gens.iter().enumerate() {
                x = arith::mul_mod(x, arith::pow_mod(g, exps[j] as u64, q), q);
            }
            logs[x as usize] = Some(exps.clone().into_boxed_slice());
            if !advance(&mut exps, &gens) {
                break;
            }
        }
        Group {
            modulus: q,
            gens,
            exponent,
            logs,
        }
    }

    fn size(&self) -> usize {
        self.gens.iter().map(|&(_, o)| o as usize).product()
    }

    fn character(self: &Arc<Self>, index: usize) -> Character {
        let mut k = vec![0u32; self.gens.len()];
        let mut r = index;
        for j in (0..self.gens.len()).rev() {
            let o = self.gens[j].1 as usize;
            k[j] = (r % o) as u32;
            r /= o;
        }
        let l = self.exponent as u64;
        let table: Vec<u32> = self
            .logs
            .iter()
            .map(|lg| match lg {
                None => ZERO,
                Some(v) => {
                    let mut s = 0u64;
                    for (j, &(_, o)) in self.gens.iter().enumerate() {
                        s += k[j] as u64 * v[j] as u64 * (l / o as u64);
                    }
                    (s % l) as u32
                }
            })
            .collect();
        let mut chi = Character::from_indices(self.modulus, self.exponent, table);
        chi.index = Some(index);
        chi
    }
}

fn advance(exps: &mut [u32], gens: &[(u64, u32)]) -> bool {
    for j in (0..exps.len()).rev() {
        exps[j] += 1;
        if exps[j] < gens[j].1 {
            return true;
        }
        exps[j] = 0;
    }
    false
}

/// Solution of `x ≡ a mod m`, `x ≡ b mod n` in `[0, mn)` for coprime `m, n`.
fn crt_pair(a: u64, m: u64, b: u64, n: u64) -> u64 {
    let mn = m * n;
    if mn == 1 {
        return 0;
    }
    let inv = mod_inverse(m as i64, n).unwrap_or(0);
    let t = arith::mul_mod(rem(b as i64 - a as i64, n), inv, n);
    (a % m.max(1) + m * t) % mn
}

fn group(q: u64) -> Arc<Group> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Group>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().unwrap().get(&q) {
        return g.clone();
    }
    let g = Arc::new(Group::build(q));
    cache.lock().unwrap().entry(q).or_insert(g).clone()
}

/// A Dirichlet character modulo `q`.
///
/// Values are kept as indices `k` meaning `e(k / order)`, with [`ZERO`] off
/// the units, next to a floating rendering used in sums.
#[derive(Clone)]
pub struct Character {
    modulus: u64,
    order: u32,
    table: Arc<[u32]>,
    values: Arc<[Complex64]>,
    conductor: u64,
    index: Option<usize>,
}

impl fmt::Debug for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Character")
            .field("modulus", &self.modulus)
            .field("index", &self.index)
            .field("conductor", &self.conductor)
            .finish()
    }
}

impl PartialEq for Character {
    fn eq(&self, other: &Self) -> bool {
        self.modulus == other.modulus
            && self.table.iter().zip(other.table.iter()).all(|(&a, &b)| {
                if a == ZERO || b == ZERO {
                    a == b
                } else {
                    a as u64 * other.order as u64 == b as u64 * self.order as u64
                }
            })
    }
}

impl Character {
    fn from_indices(modulus: u64, order: u32, table: Vec<u32>) -> Character {
        let roots: Vec<Complex64> = (0..order)
            .map(|k| unit(k as f64 / order as f64))
            .collect();
        let values: Vec<Complex64> = table
            .iter()
            .map(|&k| if k == ZERO { Complex64::new(0.0, 0.0) } else { roots[k as usize] })
            .collect();
        let mut chi = Character {
            modulus,
            order,
            table: table.into(),
            values: values.into(),
            conductor: 0,
            index: None,
        };
        chi.conductor = chi.scan_conductor();
        chi
    }

    /// The character with enumeration index `index` modulo `q`.
    pub fn new(q: u64, index: usize) -> Result<Character> {
        if q == 0 {
            return Err(Error::Domain("modulus must be positive".into()));
        }
        let g = group(q);
        if index >= g.size() {
            return Err(Error::Domain(format!(
                "character index {index} out of range for modulus {q} ({} characters)",
                g.size()
            )));
        }
        Ok(g.character(index))
    }

    pub fn principal(q: u64) -> Character {
        Character::new(q, 0).expect("q >= 1")
    }

    /// Parses a `q:index` address.
    pub fn from_address(s: &str) -> Result<Character> {
        let (q, i) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected q:index, got {s:?}")))?;
        let q: u64 = q.trim().parse().map_err(|_| Error::Parse(format!("bad modulus in {s:?}")))?;
        let i: usize = i.trim().parse().map_err(|_| Error::Parse(format!("bad index in {s:?}")))?;
        Character::new(q, i)
    }

    pub fn address(&self) -> Option<String> {
        self.index.map(|i| format!("{}:{}", self.modulus, i))
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Exponent of the value group: every value is an `order`-th root of unity.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn index(&self) -> Option<usize> {
        self.index
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus
    }

    pub fn is_principal(&self) -> bool {
        self.table.iter().all(|&k| k == 0 || k == ZERO)
    }

    pub fn is_real(&self) -> bool {
        self.table
            .iter()
            .all(|&k| k == ZERO || k == 0 || 2 * k as u64 == self.order as u64)
    }

    /// `χ(-1)` as ±1.
    pub fn sign(&self) -> i32 {
        if self.table[(self.modulus - 1) as usize] == 0 {
            1
        } else {
            -1
        }
    }

    /// `κ = (1 - χ(-1)) / 2`.
    pub fn kappa(&self) -> u32 {
        (1 - self.sign()) as u32 / 2
    }

    #[inline]
    pub fn value(&self, n: i64) -> Complex64 {
        self.values[rem(n, self.modulus) as usize]
    }

    #[inline]
    pub fn value_u(&self, n: u64) -> Complex64 {
        self.values[(n % self.modulus) as usize]
    }

    /// Exact value index at `n`, or `None` when `gcd(n, q) > 1`.
    pub fn exact(&self, n: i64) -> Option<u32> {
        match self.table[rem(n, self.modulus) as usize] {
            ZERO => None,
            k => Some(k),
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn conj(&self) -> Character {
        let l = self.order;
        let table: Vec<u32> = self
            .table
            .iter()
            .map(|&k| if k == ZERO { ZERO } else { (l - k) % l })
            .collect();
        let mut chi = Character::from_indices(self.modulus, l, table);
        chi.index = self.index.and_then(|_| locate(&chi));
        chi
    }

    /// Pointwise product, a character modulo `lcm(q, q')`.
    pub fn mul(&self, other: &Character) -> Character {
        let m = lcm(self.modulus, other.modulus);
        let l = lcm(self.order as u64, other.order as u64);
        let (f1, f2) = (l / self.order as u64, l / other.order as u64);
        let table: Vec<u32> = (0..m)
            .map(|n| {
                let a = self.table[(n % self.modulus) as usize];
                let b = other.table[(n % other.modulus) as usize];
                if a == ZERO || b == ZERO {
                    ZERO
                } else {
                    ((a as u64 * f1 + b as u64 * f2) % l) as u32
                }
            })
            .collect();
        Character::from_indices(m, l as u32, table)
    }

    pub fn pow(&self, k: u32) -> Character {
        let l = self.order as u64;
        let table: Vec<u32> = self
            .table
            .iter()
            .map(|&v| if v == ZERO { ZERO } else { ((v as u64 * k as u64) % l) as u32 })
            .collect();
        Character::from_indices(self.modulus, self.order, table)
    }

    /// Same character viewed modulo a multiple `m` of the modulus.
    pub fn lift(&self, m: u64) -> Result<Character> {
        if m % self.modulus != 0 {
            return Err(Error::Domain(format!(
                "{m} is not a multiple of the modulus {}",
                self.modulus
            )));
        }
        self.induce_from_self(m)
    }

    fn induce_from_self(&self, m: u64) -> Result<Character> {
        let table: Vec<u32> = (0..m)
            .map(|n| {
                if gcd(n, m) != 1 {
                    ZERO
                } else {
                    self.table[(n % self.modulus) as usize]
                }
            })
            .collect();
        Ok(Character::from_indices(m, self.order, table))
    }

    /// The primitive character modulo the conductor inducing `self`.
    pub fn primitive(&self) -> Character {
        let f = self.conductor;
        if f == self.modulus {
            return self.clone();
        }
        let table: Vec<u32> = (0..f)
            .map(|r| {
                if gcd(r, f) != 1 {
                    return ZERO;
                }
                let mut n = r;
                while gcd(n, self.modulus) != 1 {
                    n += f;
                }
                self.table[(n % self.modulus) as usize]
            })
            .collect();
        let mut chi = Character::from_indices(f, self.order, table);
        chi.index = locate(&chi);
        chi
    }

    /// The character modulo `m` induced by the primitive character underlying `self`.
    pub fn induce(&self, m: u64) -> Result<Character> {
        if m == 0 || m % self.conductor != 0 {
            return Err(Error::NotInducible {
                conductor: self.conductor,
                modulus: m,
            });
        }
        let mut chi = self.primitive().induce_from_self(m)?;
        chi.index = locate(&chi);
        Ok(chi)
    }

    fn scan_conductor(&self) -> u64 {
        let q = self.modulus;
        for f in arith::divisors(q) {
            let trivial = (1..q)
                .step_by(f as usize)
                .all(|n| self.table[n as usize] == 0 || self.table[n as usize] == ZERO);
            if trivial {
                return f;
            }
        }
        q
    }

    /// Splits a primitive `χ` into `χ★ · χ°` with `q★ = (q, other^∞)`.
    pub fn star_circ_decompose(&self, other: u64) -> Result<(Character, Character)> {
        if !self.is_primitive() {
            return Err(Error::Imprimitive(format!(
                "{}:{:?} has conductor {}",
                self.modulus, self.index, self.conductor
            )));
        }
        let qs = arith::coprime_power_part(self.modulus, other);
        let qo = self.modulus / qs;
        let part = |m: u64, n: u64| -> Character {
            let table: Vec<u32> = (0..m)
                .map(|r| {
                    if gcd(r, m) != 1 {
                        ZERO
                    } else {
                        self.table[crt_pair(r, m, 1, n) as usize]
                    }
                })
                .collect();
            let mut chi = Character::from_indices(m, self.order, table);
            chi.index = locate(&chi);
            chi
        };
        Ok((part(qs, qo), part(qo, qs)))
    }
}

/// Enumeration index of a character by table comparison.
fn locate(chi: &Character) -> Option<usize> {
    let g = group(chi.modulus);
    let mut index = 0usize;
    for &(gen, o) in g.gens.iter() {
        let t = chi.table[gen as usize];
        if t == ZERO {
            return None;
        }
        let scaled = t as u64 * o as u64;
        if scaled % chi.order as u64 != 0 {
            return None;
        }
        index = index * o as usize + (scaled / chi.order as u64) as usize;
    }
    (g.character(index) == *chi).then_some(index)
}

#[inline]
pub fn unit(x: f64) -> Complex64 {
    let t = TAU * (x - x.floor());
    Complex64::new(t.cos(), t.sin())
}

/// `e(a / m)` with exact reduction of the numerator.
#[inline]
pub fn e_frac(a: i64, m: u64) -> Complex64 {
    unit(rem(a, m) as f64 / m as f64)
}

/// All characters modulo `q` in enumeration order.
pub fn enumerate_characters(q: u64) -> Vec<Character> {
    let g = group(q);
    (0..g.size()).map(|i| g.character(i)).collect()
}

pub fn primitive_characters(q: u64) -> Vec<Character> {
    enumerate_characters(q)
        .into_iter()
        .filter(|c| c.is_primitive())
        .collect()
}

/// `G(χ, h) = Σ_{a mod q} χ(a) e(ah/q)` by direct summation.
pub fn gauss_sum(chi: &Character, h: i64) -> Complex64 {
    let q = chi.modulus;
    let hr = rem(h, q);
    let mut acc = crate::numeric::ComplexKahan::default();
    for a in 0..q {
        let v = chi.values[a as usize];
        if v.re != 0.0 || v.im != 0.0 {
            acc.add(v * e_frac(arith::mul_mod(a, hr, q) as i64, q));
        }
    }
    acc.value()
}

/// `|G(χ̃, a) - closed form|` for `χ̃` mod `q̃` induced by the primitive `χ`.
pub fn verify_lemma234(chi: &Character, q_tilde: u64, a: i64) -> Result<f64> {
    if !chi.is_primitive() {
        return Err(Error::Imprimitive("Gauss-sum lifting needs a primitive character".into()));
    }
    let q = chi.modulus;
    if q_tilde % q != 0 || !arith::divides_power_of(q_tilde, q) {
        return Err(Error::Domain(format!("{q_tilde} is not a divisor of {q}^∞ divisible by {q}")));
    }
    let induced = chi.induce(q_tilde)?;
    let direct = gauss_sum(&induced, a);
    let ratio = q_tilde / q;
    let closed = if a.rem_euclid(ratio as i64) != 0 {
        Complex64::new(0.0, 0.0)
    } else {
        chi.conj().value(a / ratio as i64) * gauss_sum(chi, 1) * ratio as f64
    };
    Ok((direct - closed).norm())
}

/// Kronecker symbol `(D / n)` for `n ≥ 0`.
pub fn kronecker(d: i64, n: u64) -> i32 {
    if n == 0 {
        return (d.unsigned_abs() == 1) as i32;
    }
    let mut n = n;
    let mut sign = 1;
    let tz = n.trailing_zeros();
    if tz > 0 {
        if d % 2 == 0 {
            return 0;
        }
        let dm8 = d.rem_euclid(8);
        if tz % 2 == 1 && (dm8 == 3 || dm8 == 5) {
            sign = -sign;
        }
        n >>= tz;
    }
    // Jacobi symbol (d mod n / n) for odd n.
    let mut a = rem(d, n);
    let mut m = n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if m % 8 == 3 || m % 8 == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            sign = -sign;
        }
        a %= m;
    }
    if m == 1 {
        sign
    } else {
        0
    }
}

pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    let m = d.rem_euclid(4);
    let sqfree = |x: u64| x > 0 && arith::factorize(x).map(|f| f.is_squarefree()).unwrap_or(false);
    if m == 1 {
        sqfree(d.unsigned_abs())
    } else if m == 0 {
        let k = d / 4;
        matches!(k.rem_euclid(4), 2 | 3) && sqfree(k.unsigned_abs())
    } else {
        false
    }
}

/// The real primitive character `χ_D = (D / ·)` modulo `|D|`.
pub fn kronecker_character(d: i64) -> Result<Character> {
    if !is_fundamental_discriminant(d) {
        return Err(Error::NotFundamental(d));
    }
    let q = d.unsigned_abs();
    enumerate_characters(q)
        .into_iter()
        .find(|c| {
            c.is_real()
                && (0..q).all(|n| {
                    let v = c.value_u(n).re.round() as i32;
                    v == kronecker(d, n)
                })
        })
        .filter(|c| c.is_primitive())
        .ok_or(Error::NotFundamental(d))
}

/// A pair of primitive characters with the coprime-power splitting
/// `q_i★ = (q_i, q_j^∞)`, `q_i° = q_i / q_i★` and `χ_i = χ_i★ χ_i°`.
#[derive(Debug, Clone)]
pub struct CharPairContext {
    pub chi1: Character,
    pub chi2: Character,
    pub chi1_star: Character,
    pub chi1_circ: Character,
    pub chi2_star: Character,
    pub chi2_circ: Character,
}

impl CharPairContext {
    pub fn new(chi1: Character, chi2: Character) -> Result<Self> {
        let (chi1_star, chi1_circ) = chi1.star_circ_decompose(chi2.modulus())?;
        let (chi2_star, chi2_circ) = chi2.star_circ_decompose(chi1.modulus())?;
        Ok(CharPairContext {
            chi1,
            chi2,
            chi1_star,
            chi1_circ,
            chi2_star,
            chi2_circ,
        })
    }

    pub fn from_addresses(a: &str, b: &str) -> Result<Self> {
        Self::new(Character::from_address(a)?, Character::from_address(b)?)
    }

    pub fn q1(&self) -> u64 {
        self.chi1.modulus()
    }

    pub fn q2(&self) -> u64 {
        self.chi2.modulus()
    }

    /// `q_0 = (q_1 q_2)^{1/2}`.
    pub fn q0(&self) -> f64 {
        (self.q0_squared() as f64).sqrt()
    }

    pub fn q0_squared(&self) -> u64 {
        self.q1() * self.q2()
    }

    pub fn q1_star(&self) -> u64 {
        self.chi1_star.modulus()
    }

    pub fn q2_star(&self) -> u64 {
        self.chi2_star.modulus()
    }

    pub fn q1_circ(&self) -> u64 {
        self.chi1_circ.modulus()
    }

    pub fn q2_circ(&self) -> u64 {
        self.chi2_circ.modulus()
    }

    /// `(q_1, q_2^∞) / (q_1, q_2)`, the reduced star part used in error terms.
    pub fn q1_star_reduced(&self) -> u64 {
        arith::star_quotient(self.q1(), self.q2())
    }

    pub fn q2_star_reduced(&self) -> u64 {
        arith::star_quotient(self.q2(), self.q1())
    }

    pub fn same_character(&self) -> bool {
        self.chi1 == self.chi2
    }

    pub fn conj(&self) -> Result<Self> {
        Self::new(self.chi1.conj(), self.chi2.conj())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn enumeration_examples() {
        let one = enumerate_characters(1);
        assert_eq!(one.len(), 1);
        assert!((0..10).all(|n| one[0].value(n) == Complex64::new(1.0, 0.0)));
        assert_eq!(enumerate_characters(5).len(), 4);
        let twelve = enumerate_characters(12);
        assert_eq!(twelve.len(), 4);
        let prim: Vec<_> = twelve.iter().filter(|c| c.is_primitive()).collect();
        assert_eq!(prim.len(), 1);
        assert!(prim[0].is_real());
    }

    #[test]
    fn values_and_multiplicativity() {
        for q in 1..=200u64 {
            for chi in enumerate_characters(q) {
                for n in 0..q {
                    let v = chi.value_u(n);
                    if gcd(n, q) > 1 {
                        assert_eq!(v.norm(), 0.0);
                    } else {
                        assert!((v.norm() - 1.0).abs() < 1e-12);
                    }
                }
                if q <= 60 {
                    for m in 1..q {
                        for n in 1..q {
                            let lhs = chi.exact((m * n % q) as i64);
                            match (chi.exact(m as i64), chi.exact(n as i64)) {
                                (Some(a), Some(b)) => {
                                    assert_eq!(lhs, Some((a + b) % chi.order()));
                                }
                                _ => assert_eq!(lhs, None),
                            }
                        }
                    }
                }
                assert_eq!(chi.kappa(), ((1.0 - chi.value(-1).re) / 2.0).round() as u32);
                assert_eq!(q % chi.conductor(), 0);
            }
        }
    }

    #[test]
    fn orthogonality() {
        for q in 1..=60u64 {
            let chars = enumerate_characters(q);
            let phi = arith::euler_phi(q) as f64;
            for a in 0..q {
                for b in 0..q {
                    let s: Complex64 = chars.iter().map(|c| c.value_u(a) * c.value_u(b).conj()).sum();
                    let expect = (a == b && gcd(a, q) == 1) as u8 as f64;
                    assert!((s / phi - expect).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn conductor_examples() {
        assert_eq!(Character::principal(6).conductor(), 1);
        let chi3 = Character::new(3, 1).unwrap();
        let ind = chi3.induce(9).unwrap();
        for n in 0..27i64 {
            if n % 3 == 0 {
                assert_eq!(ind.value(n), Complex64::new(0.0, 0.0));
            } else {
                assert!(close(ind.value(n), chi3.value(n), 1e-15));
            }
        }
        assert!(chi3.induce(10).is_err());
        for q in 1..=100u64 {
            let count = enumerate_characters(q).iter().filter(|c| c.is_primitive()).count() as i64;
            let oracle: i64 = arith::divisors(q)
                .iter()
                .map(|&d| arith::mobius(q / d) * arith::euler_phi(d) as i64)
                .sum();
            assert_eq!(count, oracle, "q = {q}");
        }
    }

    #[test]
    fn conductor_matches_brute_force() {
        for q in 1..=48u64 {
            for chi in enumerate_characters(q) {
                let f = arith::divisors(q)
                    .into_iter()
                    .find(|&f| {
                        (1..=q).all(|n| {
                            gcd(n, q) != 1 || n % f != 1 % f || (chi.value_u(n) - 1.0).norm() < 1e-9
                        })
                    })
                    .unwrap();
                assert_eq!(chi.conductor(), f);
            }
        }
    }

    #[test]
    fn gauss_sum_examples() {
        for q in 1..=200u64 {
            for chi in primitive_characters(q) {
                assert!((gauss_sum(&chi, 1).norm() - (q as f64).sqrt()).abs() < 1e-9);
            }
        }
        let chi3 = Character::new(3, 1).unwrap();
        assert!(close(gauss_sum(&chi3, 1), Complex64::new(0.0, 3f64.sqrt()), 1e-12));
        let ind = chi3.induce(9).unwrap();
        assert!(gauss_sum(&ind, 1).norm() < 1e-12);
    }

    #[test]
    fn gauss_sum_identities() {
        for q in 1..=60u64 {
            for chi in enumerate_characters(q) {
                for h in -5..(q as i64 + 5) {
                    let lhs = gauss_sum(&chi.conj(), h);
                    let rhs = chi.value(-1) * gauss_sum(&chi, h).conj();
                    assert!(close(lhs, rhs, 1e-9));
                }
            }
        }
        for q in 1..=200u64 {
            for chi in primitive_characters(q) {
                let g = gauss_sum(&chi, 1);
                for h in [2i64, 3, 7, 11, -1] {
                    if gcd_i(h, q) == 1 {
                        assert!(close(gauss_sum(&chi, h), chi.conj().value(h) * g, 1e-8));
                    }
                }
            }
        }
    }

    fn gcd_i(a: i64, b: u64) -> u64 {
        arith::gcd(a.unsigned_abs(), b)
    }

    #[test]
    fn lemma234_examples() {
        let chi3 = Character::new(3, 1).unwrap();
        assert!(verify_lemma234(&chi3, 9, 3).unwrap() < 1e-9);
        assert!(verify_lemma234(&chi3, 9, 1).unwrap() < 1e-9);
        let induced = chi3.induce(9).unwrap();
        assert!(gauss_sum(&induced, 1).norm() < 1e-9);
        let chi4 = Character::new(4, 1).unwrap();
        assert!(verify_lemma234(&chi4, 8, 2).unwrap() < 1e-9);
        assert!(verify_lemma234(&chi3, 6, 1).is_err());
    }

    #[test]
    fn star_circ_examples() {
        let chi3 = Character::new(3, 1).unwrap();
        let (s, o) = chi3.star_circ_decompose(4).unwrap();
        assert_eq!((s.modulus(), o.modulus()), (1, 3));
        assert_eq!(o, chi3);
        let chi12 = primitive_characters(12).pop().unwrap();
        let (s, o) = chi12.star_circ_decompose(8).unwrap();
        assert_eq!((s.modulus(), o.modulus()), (4, 3));
        assert!(s.is_primitive() && o.is_primitive());
        assert_eq!(s.mul(&o), chi12);
        let chi5 = Character::new(5, 1).unwrap();
        let (s, o) = chi5.star_circ_decompose(5).unwrap();
        assert_eq!(s, chi5);
        assert_eq!(o.modulus(), 1);
        assert!(Character::principal(12).star_circ_decompose(2).is_err());
    }

    #[test]
    fn star_circ_reconstructs_everywhere() {
        for q in 1..=120u64 {
            for chi in primitive_characters(q) {
                for other in [2u64, 3, 5, 6, 10, 12, 7] {
                    let (s, o) = chi.star_circ_decompose(other).unwrap();
                    assert!(s.is_primitive() && o.is_primitive());
                    assert_eq!(s.mul(&o), chi);
                }
            }
        }
    }

    #[test]
    fn pair_context_invariants() {
        for (a, b) in [("3:1", "4:1"), ("12:3", "8:3"), ("9:1", "3:1"), ("5:1", "5:2"), ("1:0", "7:3")] {
            let ctx = CharPairContext::from_addresses(a, b);
            let Ok(ctx) = ctx else { continue };
            assert_eq!(ctx.q1_star() * ctx.q1_circ(), ctx.q1());
            assert_eq!(ctx.q2_star() * ctx.q2_circ(), ctx.q2());
            assert_eq!(gcd(ctx.q1_circ(), ctx.q2()), 1);
            assert_eq!(gcd(ctx.q2_circ(), ctx.q1()), 1);
            assert_eq!(ctx.q0_squared(), ctx.q1() * ctx.q2());
            assert!((ctx.q0() * ctx.q0() / (ctx.q1() * ctx.q2()) as f64 - 1.0).abs() < 1e-15);
        }
        let ctx = CharPairContext::from_addresses("9:1", "3:1").unwrap();
        assert_eq!(ctx.q1_star_reduced(), 3);
    }

    #[test]
    fn addresses_round_trip() {
        let chi = Character::from_address("7:4").unwrap();
        assert_eq!(chi.address().as_deref(), Some("7:4"));
        assert!(Character::from_address("7:6").is_err());
        assert!(Character::from_address("7").is_err());
        let c = chi.conj();
        assert_eq!(Character::new(7, c.index().unwrap()).unwrap(), c);
    }

    #[test]
    fn kronecker_characters() {
        assert_eq!(kronecker_character(-4).unwrap().modulus(), 4);
        assert_eq!(kronecker_character(5).unwrap().sign(), 1);
        assert_eq!(kronecker_character(-4).unwrap().sign(), -1);
        assert!(kronecker_character(12).unwrap().is_primitive());
        assert!(kronecker_character(16).is_err());
        assert!(kronecker_character(-3).unwrap().is_primitive());
        for d in -200i64..200 {
            if let Ok(chi) = kronecker_character(d) {
                assert!(chi.is_real() && chi.is_primitive());
                assert_eq!(chi.sign(), d.signum() as i32);
            }
        }
    }
}
