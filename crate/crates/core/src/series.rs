//! Truncated Laurent series around `z = 0` and the expansions feeding the
//! main-term residues: `ζ(1+z)`, `L(1+z, χ)`, `ψ_z(q)`, `Z_q(z)`, `V̂(z)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{divisors, mobius};
use crate::chars::Character;
use crate::error::{Error, Result};
use crate::special::bernoulli_even;
use crate::weight::SmoothWeight;

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `Σ_{k=start}^{order} c_k z^k + O(z^{order+1})`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedLaurent {
    start: i32,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for TruncatedLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Laurent[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "z^{}: {:.6e}{:+.6e}i", self.start + i as i32, c.re, c.im)?;
        }
        write!(f, "; O(z^{})]", self.order() + 1)
    }
}

impl TruncatedLaurent {
    /// Coefficients of `z^start, z^{start+1}, …`; at least one is required.
    pub fn new(start: i32, coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs at least one coefficient");
        Self { start, coeffs }
    }

    pub fn from_real(start: i32, coeffs: &[f64]) -> Self {
        Self::new(start, coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Taylor series `Σ_{k=0}^{K} c_k z^k`.
    pub fn taylor(coeffs: Vec<Complex64>) -> Self {
        Self::new(0, coeffs)
    }

    /// The constant `c`, known to order `k`.
    pub fn constant(c: Complex64, k: usize) -> Self {
        let mut v = vec![ZERO; k + 1];
        v[0] = c;
        Self::new(0, v)
    }

    pub fn one(k: usize) -> Self {
        Self::constant(ONE, k)
    }

    /// `z^p`, exact, stored to order `p + k`.
    pub fn monomial(p: i32, k: usize) -> Self {
        let mut v = vec![ZERO; k + 1];
        v[0] = ONE;
        Self::new(p, v)
    }

    /// `exp(c z)` to order `k`.
    pub fn exp_linear(c: Complex64, k: usize) -> Self {
        let mut v = Vec::with_capacity(k + 1);
        let mut term = ONE;
        for j in 0..=k {
            if j > 0 {
                term = term * c / j as f64;
            }
            v.push(term);
        }
        Self::taylor(v)
    }

    /// `t^z = Σ (z log t)^j / j!` to order `k`.
    pub fn exp_of_z_logt(log_t: f64, k: usize) -> Self {
        Self::exp_linear(Complex64::new(log_t, 0.0), k)
    }

    /// `a^{-z}` for `a > 0`.
    pub fn pow_neg_z(a: f64, k: usize) -> Self {
        Self::exp_linear(Complex64::new(-a.ln(), 0.0), k)
    }

    /// Lowest stored exponent.
    pub fn start(&self) -> i32 {
        self.start
    }

    /// Highest exponent whose coefficient is known.
    pub fn order(&self) -> i32 {
        self.start + self.coeffs.len() as i32 - 1
    }

    /// Order of the pole at 0 (0 for holomorphic series).
    pub fn pole_order(&self) -> usize {
        match self.coeffs.iter().position(|c| *c != ZERO) {
            Some(i) => (-(self.start + i as i32)).max(0) as usize,
            None => 0,
        }
    }

    /// Coefficient of `z^k`; zero below `start`, `None` beyond the truncation.
    pub fn coeff(&self, k: i32) -> Option<Complex64> {
        if k > self.order() {
            return None;
        }
        if k < self.start {
            return Some(ZERO);
        }
        Some(self.coeffs[(k - self.start) as usize])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Drops known terms above `z^k`.
    pub fn truncate(&self, k: i32) -> Self {
        let k = k.min(self.order());
        if k < self.start {
            return Self::new(self.start, vec![ZERO]);
        }
        Self::new(self.start, self.coeffs[..=((k - self.start) as usize)].to_vec())
    }

    /// Removes exactly-zero leading coefficients.
    pub fn trim(&self) -> Self {
        let skip = self.coeffs.iter().take(self.coeffs.len() - 1).take_while(|c| **c == ZERO).count();
        Self::new(self.start + skip as i32, self.coeffs[skip..].to_vec())
    }

    /// Sets leading coefficients below `tol` in magnitude to zero and removes them.
    pub fn chop_leading(&self, tol: f64) -> Self {
        let skip = self.coeffs.iter().take(self.coeffs.len() - 1).take_while(|c| c.norm() <= tol).count();
        Self::new(self.start + skip as i32, self.coeffs[skip..].to_vec())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.start, self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn scale_re(&self, c: f64) -> Self {
        Self::new(self.start, self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Multiplies by `z^p`.
    pub fn shift(&self, p: i32) -> Self {
        Self::new(self.start + p, self.coeffs.clone())
    }

    /// `f(λz)`.
    pub fn scale_var(&self, lambda: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * lambda.powi(self.start + i as i32))
            .collect();
        Self::new(self.start, coeffs)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.start, self.coeffs.iter().map(|c| c.conj()).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let start = self.start.min(other.start);
        let order = self.order().min(other.order());
        if order < start {
            return Self::new(start, vec![ZERO]);
        }
        let coeffs = (start..=order)
            .map(|k| self.coeff(k).unwrap_or(ZERO) + other.coeff(k).unwrap_or(ZERO))
            .collect();
        Self::new(start, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.start, self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let start = self.start + other.start;
        let order = (self.order() + other.start).min(other.order() + self.start);
        let n = (order - start + 1).max(1) as usize;
        let mut coeffs = vec![ZERO; n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= n {
                break;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n - i) {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(start, coeffs)
    }

    /// `1/f`; the leading stored coefficient must be nonzero.
    pub fn recip(&self) -> Result<Self> {
        let lead = self.coeffs[0];
        if lead == ZERO {
            return Err(Error::SeriesDivision);
        }
        let n = self.coeffs.len();
        let mut inv = vec![ZERO; n];
        inv[0] = ONE / lead;
        for k in 1..n {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.coeffs[j] * inv[k - j];
            }
            inv[k] = -acc / lead;
        }
        Ok(Self::new(-self.start, inv))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::new(0, vec![ONE; 1]).with_order(self.order() - self.start);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Pads an exact series (like a constant) so it is known to order `k`.
    fn with_order(&self, k: i32) -> Self {
        let mut coeffs = self.coeffs.clone();
        while self.start + (coeffs.len() as i32) - 1 < k {
            coeffs.push(ZERO);
        }
        Self::new(self.start, coeffs)
    }

    /// Evaluates the stored terms at `z ≠ 0`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.start)
    }

    /// Residue: the coefficient of `z^{-1}`.
    pub fn residue(&self) -> Result<Complex64> {
        self.coeff(-1).ok_or(Error::Truncation { have: (self.order() + 1).max(0) as usize, need: 0 })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lo = self.start.min(other.start);
        let hi = self.order().min(other.order());
        (lo..=hi)
            .map(|k| (self.coeff(k).unwrap_or(ZERO) - other.coeff(k).unwrap_or(ZERO)).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &TruncatedLaurent {
    type Output = TruncatedLaurent;
    fn add(self, rhs: Self) -> TruncatedLaurent {
        TruncatedLaurent::add(self, rhs)
    }
}

impl Sub for &TruncatedLaurent {
    type Output = TruncatedLaurent;
    fn sub(self, rhs: Self) -> TruncatedLaurent {
        TruncatedLaurent::sub(self, rhs)
    }
}

impl Mul for &TruncatedLaurent {
    type Output = TruncatedLaurent;
    fn mul(self, rhs: Self) -> TruncatedLaurent {
        TruncatedLaurent::mul(self, rhs)
    }
}

impl Neg for &TruncatedLaurent {
    type Output = TruncatedLaurent;
    fn neg(self) -> TruncatedLaurent {
        TruncatedLaurent::neg(self)
    }
}

/// `P(X) = Σ a_j X^j` with `X = log t`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPolynomial {
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for LogPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogPolynomial{:?}", self.coeffs.iter().map(|c| (c.re, c.im)).collect::<Vec<_>>())
    }
}

impl LogPolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> Complex64 {
        self.coeffs.get(j).copied().unwrap_or(ZERO)
    }

    /// Real parts of the coefficients.
    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    /// Largest coefficient imaginary part.
    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// Degree, ignoring trailing coefficients of magnitude at most `tol`.
    pub fn degree_tol(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.norm() > tol)
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree_tol(0.0)
    }

    pub fn leading(&self) -> Complex64 {
        self.degree().map(|d| self.coeffs[d]).unwrap_or(ZERO)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * x + c)
    }

    pub fn eval_re(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.re)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|j| self.coeff(j) + other.coeff(j)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// `2 Re P` coefficientwise.
    pub fn two_re(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| Complex64::new(2.0 * c.re, 0.0)).collect())
    }

    /// `X ↦ P(X + c)`.
    pub fn shift(&self, c: f64) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![ZERO; n];
        // Horner in the shifted variable
        for a in self.coeffs.iter().rev() {
            let mut next = vec![ZERO; n];
            for j in 0..n {
                if j + 1 < n {
                    next[j + 1] += out[j];
                }
                next[j] += out[j] * c;
            }
            next[0] += a;
            out = next;
        }
        Self::new(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).map(|j| (self.coeff(j) - other.coeff(j)).norm()).fold(0.0, f64::max)
    }
}

/// `Res_{z=0} F(z) t^z` as a polynomial in `log t`: `a_j = c_{-1-j} / j!`.
pub fn residue_to_logpoly(f: &TruncatedLaurent) -> Result<LogPolynomial> {
    if f.order() < -1 {
        return Err(Error::Truncation { have: 0, need: (-1 - f.order()) as usize });
    }
    let top = (-1 - f.start()).max(-1);
    let mut coeffs = Vec::new();
    let mut fact = 1.0;
    for j in 0..=top {
        if j > 0 {
            fact *= j as f64;
        }
        let c = f.coeff(-1 - j).unwrap_or(ZERO);
        coeffs.push(c / fact);
    }
    Ok(LogPolynomial::new(coeffs))
}

/// Taylor coefficients of `ζ(s₀ + z, a)` to order `k`; for `s₀ = 1` the
/// pole `1/z` is removed and the regular part is returned.
///
/// Euler–Maclaurin with the `z`-dependence expanded termwise.
pub fn hurwitz_taylor(s0: Complex64, a: f64, k: usize) -> Vec<Complex64> {
    assert!(a > 0.0 && a <= 1.0, "Hurwitz parameter must lie in (0, 1]");
    let at_pole = (s0 - ONE).norm() < 1e-300;
    let shift = 20 + s0.im.abs().ceil() as usize;
    let m = 12;
    let mut acc = vec![ZERO; k + 1];
    let add_exp = |acc: &mut Vec<Complex64>, amp: Complex64, log_x: f64| {
        // amp · exp(-z log x)
        let mut term = amp;
        for (j, slot) in acc.iter_mut().enumerate() {
            if j > 0 {
                term = term * (-log_x) / j as f64;
            }
            *slot += term;
        }
    };
    for n in 0..shift {
        let x = n as f64 + a;
        let lx = x.ln();
        add_exp(&mut acc, (-s0 * lx).exp(), lx);
    }
    let w = shift as f64 + a;
    let lw = w.ln();
    if at_pole {
        // w^{-z}/z minus 1/z
        let mut term = ONE;
        for (j, slot) in acc.iter_mut().enumerate() {
            term = term * (-lw) / (j + 1) as f64;
            *slot += term;
        }
    } else {
        // w^{1-s0-z} / (s0 - 1 + z)
        let base = TruncatedLaurent::exp_linear(Complex64::new(-lw, 0.0), k).scale(((ONE - s0) * lw).exp());
        let denom = TruncatedLaurent::taylor({
            let mut v = vec![ZERO; k + 1];
            v[0] = s0 - 1.0;
            if k >= 1 {
                v[1] = ONE;
            }
            v
        });
        let t = base.div(&denom).expect("s0 != 1");
        for (j, slot) in acc.iter_mut().enumerate() {
            *slot += t.coeff(j as i32).unwrap_or(ZERO);
        }
    }
    add_exp(&mut acc, 0.5 * (-s0 * lw).exp(), lw);
    let mut fact = 1.0;
    let mut poch = TruncatedLaurent::one(k);
    for j in 1..=m {
        // (s)_{2j-1} built incrementally
        let lo = if j == 1 { 0 } else { 2 * j - 3 };
        for i in lo..(2 * j - 1) {
            let mut v = vec![ZERO; k + 1];
            v[0] = s0 + i as f64;
            if k >= 1 {
                v[1] = ONE;
            }
            poch = poch.mul(&TruncatedLaurent::taylor(v));
        }
        fact *= ((2 * j - 1) * (2 * j)) as f64;
        let amp = (-(s0 + (2 * j - 1) as f64) * lw).exp() * (bernoulli_even(j) / fact);
        let series = poch.mul(&TruncatedLaurent::exp_linear(Complex64::new(-lw, 0.0), k)).scale(amp);
        for (i, slot) in acc.iter_mut().enumerate() {
            *slot += series.coeff(i as i32).unwrap_or(ZERO);
        }
    }
    acc
}

/// `ζ(1+z) = 1/z + Σ (-1)^n γ_n z^n / n!` to order `k`.
pub fn zeta_laurent(k: usize) -> TruncatedLaurent {
    let mut coeffs = vec![ONE];
    coeffs.extend(hurwitz_taylor(ONE, 1.0, k));
    TruncatedLaurent::new(-1, coeffs)
}

/// Taylor series of `ζ(s₀ + z)` for `s₀ ≠ 1`.
pub fn zeta_taylor(s0: f64, k: usize) -> TruncatedLaurent {
    TruncatedLaurent::taylor(hurwitz_taylor(Complex64::new(s0, 0.0), 1.0, k))
}

/// Taylor series of `L(1+z, χ)` for non-principal `χ`, via
/// `q^{-1-z} Σ_a χ(a) (ζ(1+z, a/q) - 1/z)`.
pub fn l_taylor_at_1(chi: &Character, k: usize) -> Result<TruncatedLaurent> {
    if chi.is_principal() {
        return Err(Error::Pole);
    }
    let q = chi.modulus();
    let mut acc = vec![ZERO; k + 1];
    for a in 1..=q {
        let c = chi.value_u(a);
        if c == ZERO {
            continue;
        }
        let h = hurwitz_taylor(ONE, a as f64 / q as f64, k);
        for (slot, v) in acc.iter_mut().zip(h) {
            *slot += c * v;
        }
    }
    let qf = q as f64;
    Ok(TruncatedLaurent::taylor(acc).mul(&TruncatedLaurent::pow_neg_z(qf, k)).scale_re(1.0 / qf))
}

/// Laurent series of `L(1+z, χ)` for any character: principal characters give
/// `ζ(1+z) Σ_{d|q} μ(d) d^{-1-z}`.
pub fn l_series_at_1(chi: &Character, k: usize) -> Result<TruncatedLaurent> {
    if chi.is_principal() {
        // Σ_{d|q} μ(d) d^{-1-z} = ψ_z(q)
        let euler = psi_series(chi.modulus(), k + 1);
        return Ok(zeta_laurent(k).mul(&euler));
    }
    l_taylor_at_1(chi, k)
}

/// `Σ_{d|q} μ(d) d^{-1-offset-scale·z}`.
pub fn dirichlet_mobius_series(q: u64, offset: f64, scale: f64, k: usize) -> TruncatedLaurent {
    let mut acc = vec![ZERO; k + 1];
    for d in divisors(q) {
        let mu = mobius(d);
        if mu == 0 {
            continue;
        }
        let ld = (d as f64).ln();
        let mut term = Complex64::new(mu as f64 * (-(1.0 + offset) * ld).exp(), 0.0);
        for (j, slot) in acc.iter_mut().enumerate() {
            if j > 0 {
                term = term * (-scale * ld) / j as f64;
            }
            *slot += term;
        }
    }
    TruncatedLaurent::taylor(acc)
}

/// `ψ_z(q) = Σ_{d|q} μ(d) / d^{1+z}`.
pub fn psi_series(q: u64, k: usize) -> TruncatedLaurent {
    dirichlet_mobius_series(q, 0.0, 1.0, k)
}

/// `ψ_w(q)` at the point `w = offset + scale·z`.
pub fn psi_series_at(q: u64, offset: f64, scale: f64, k: usize) -> TruncatedLaurent {
    dirichlet_mobius_series(q, offset, scale, k)
}

/// `ψ_w(q)` at a single real point.
pub fn psi_value(q: u64, w: f64) -> f64 {
    divisors(q).into_iter().map(|d| mobius(d) as f64 * (d as f64).powf(-1.0 - w)).sum()
}

/// `Z_q(z) = ψ_z(q) z ζ(1+z)`, entire.
pub fn zq_series(q: u64, k: usize) -> TruncatedLaurent {
    psi_series(q, k).mul(&zeta_laurent(k + 1).shift(1))
}

/// `V̂(z) = 1/z - Σ_ℓ z^{2ℓ+1}/(2ℓ+2)! ∫ V'(ξ)(log ξ)^{2ℓ+2} dξ`.
pub fn vhat_series(v: &SmoothWeight, k: usize) -> Result<TruncatedLaurent> {
    v.check_admissible()?;
    let mut coeffs = vec![ONE];
    let mut fact = 1.0;
    for j in 0..=k {
        fact *= (j + 1) as f64;
        let c = if j % 2 == 1 { -v.log_moment(j + 1) / fact } else { 0.0 };
        coeffs.push(Complex64::new(c, 0.0));
    }
    Ok(TruncatedLaurent::new(-1, coeffs))
}

/// Named expansions for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Named {
    Zeta,
    Psi(u64),
    Zq(u64),
    VHat,
}

pub fn named_series(what: Named, k: usize) -> Result<TruncatedLaurent> {
    Ok(match what {
        Named::Zeta => zeta_laurent(k),
        Named::Psi(q) => psi_series(q, k),
        Named::Zq(q) => zq_series(q, k),
        Named::VHat => vhat_series(&SmoothWeight::default(), k)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::EULER_GAMMA;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn pole_times_z_is_one() {
        let inv_z = TruncatedLaurent::monomial(-1, 6);
        let z = TruncatedLaurent::monomial(1, 6);
        let p = inv_z.mul(&z);
        assert_eq!(p.start(), 0);
        assert_eq!(p.coeff(0), Some(ONE));
        for j in 1..=p.order() {
            assert_eq!(p.coeff(j), Some(ZERO));
        }
    }

    #[test]
    fn exp_of_log_fourth_coefficient() {
        let lt = 3.7f64;
        let s = TruncatedLaurent::exp_of_z_logt(lt, 4);
        assert!((s.coeff(4).unwrap().re - lt.powi(4) / 24.0).abs() < 1e-14);
    }

    #[test]
    fn zeta_reciprocal_closure() {
        let z = zeta_laurent(10);
        let inv = z.recip().unwrap();
        assert_eq!(inv.start(), 1);
        let one = z.mul(&inv);
        assert!(one.max_abs_diff(&TruncatedLaurent::one(10)) < 1e-12);
    }

    #[test]
    fn stieltjes_constants() {
        let z = zeta_laurent(8);
        assert_eq!(z.coeff(-1), Some(ONE));
        assert!((z.coeff(0).unwrap().re - EULER_GAMMA).abs() < 1e-14);
        // oracle: H_N - log N with two correction terms at N = 10^6
        let n = 1_000_000u64;
        let h: f64 = (1..=n).rev().map(|k| 1.0 / k as f64).sum();
        let nf = n as f64;
        let gamma = h - nf.ln() - 0.5 / nf + 1.0 / (12.0 * nf * nf);
        assert!((gamma - z.coeff(0).unwrap().re).abs() < 1e-13);
        assert!((z.coeff(1).unwrap().re - 0.072_815_845_483_676_72).abs() < 1e-13);
    }

    #[test]
    fn gamma_one_by_limit_sum() {
        // γ₁ = lim Σ_{k≤N} log k / k - (log N)²/2, with Euler–Maclaurin corrections
        let n = 200_000u64;
        let s: f64 = (1..=n).rev().map(|k| (k as f64).ln() / k as f64).sum();
        let nf = n as f64;
        let ln = nf.ln();
        let g1 = s - 0.5 * ln * ln - 0.5 * ln / nf - (1.0 - ln) / (12.0 * nf * nf);
        let z = zeta_laurent(4);
        assert!((z.coeff(1).unwrap().re + g1).abs() < 1e-12);
    }

    #[test]
    fn hurwitz_taylor_matches_values() {
        // ζ(2 + z) at z = 0.1 and ζ(2, 1/2) = π²/2
        let t = hurwitz_taylor(c(2.0), 0.5, 0);
        assert!((t[0].re - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-13);
        let taylor = zeta_taylor(2.0, 14);
        let v = taylor.eval(c(0.1));
        let direct = hurwitz_taylor(c(2.1), 1.0, 0)[0];
        assert!((v - direct).norm() < 1e-13);
    }

    #[test]
    fn psi_and_zq_values() {
        let p = psi_series(6, 4);
        assert!((p.coeff(0).unwrap().re - 1.0 / 3.0).abs() < 1e-15);
        let one = psi_series(1, 8);
        assert!(one.max_abs_diff(&TruncatedLaurent::one(8)) == 0.0);
        let z3 = zq_series(3, 6);
        assert_eq!(z3.start(), 0);
        assert!((z3.coeff(0).unwrap().re - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn l_taylor_for_chi_minus_four() {
        let chi = crate::chars::kronecker_character(-4).unwrap();
        let l = l_taylor_at_1(&chi, 8).unwrap();
        assert!((l.coeff(0).unwrap() - c(std::f64::consts::FRAC_PI_4)).norm() < 1e-14);
        // L(1.1, χ₋₄) by the Hurwitz representation at s = 1.1
        let direct: Complex64 = (1..=4u64)
            .map(|a| chi.value_u(a) * hurwitz_taylor(c(1.1), a as f64 / 4.0, 0)[0])
            .sum::<Complex64>()
            * 4f64.powf(-1.1);
        assert!((l.eval(c(0.1)) - direct).norm() < 1e-12);
        assert!(l_taylor_at_1(&Character::principal(4), 4).is_err());
    }

    #[test]
    fn conjugate_character_gives_conjugate_series() {
        let chi = Character::new(5, 1).unwrap();
        let a = l_taylor_at_1(&chi, 6).unwrap();
        let b = l_taylor_at_1(&chi.conj(), 6).unwrap();
        assert!(a.conj().max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn vhat_structure() {
        let v = SmoothWeight::new(0.8).unwrap();
        let s = vhat_series(&v, 8).unwrap();
        assert_eq!(s.coeff(-1), Some(ONE));
        assert_eq!(s.coeff(0), Some(ZERO));
        assert_eq!(s.coeff(2), Some(ZERO));
        assert!(s.coeff(1).unwrap().re != 0.0);
        // compare with the Mellin transform at z = 0.3
        let direct = v.mellin(0.3);
        assert!((s.eval(c(0.3)).re - direct).abs() < 1e-12);
    }

    #[test]
    fn residue_mappings() {
        let p = residue_to_logpoly(&TruncatedLaurent::monomial(-5, 5)).unwrap();
        assert!((p.coeff(4).re - 1.0 / 24.0).abs() < 1e-16);
        assert_eq!(p.degree(), Some(4));
        let p = residue_to_logpoly(&TruncatedLaurent::monomial(-1, 2)).unwrap();
        assert_eq!(p.coeffs(), &[ONE]);
        let f = TruncatedLaurent::from_real(-3, &[1.0, EULER_GAMMA, 0.0, 5.0]);
        let p = residue_to_logpoly(&f).unwrap();
        assert!((p.coeff(0)).norm() < 1e-16);
        assert!((p.coeff(1).re - EULER_GAMMA).abs() < 1e-16);
        assert!((p.coeff(2).re - 0.5).abs() < 1e-16);
    }

    #[test]
    fn residue_needs_enough_terms() {
        let f = TruncatedLaurent::from_real(-4, &[1.0, 2.0]);
        assert!(residue_to_logpoly(&f).is_err());
    }

    #[test]
    fn logpoly_shift() {
        let p = LogPolynomial::from_real(&[1.0, -2.0, 0.5, 3.0]);
        let s = p.shift(0.7);
        for x in [-1.0, 0.0, 2.5] {
            assert!((s.eval_re(x) - p.eval_re(x + 0.7)).abs() < 1e-13);
        }
    }

    #[test]
    fn doubling_order_is_stable() {
        let a = zq_series(12, 8);
        let b = zq_series(12, 16);
        assert!(a.max_abs_diff(&b) < 1e-12);
    }
}
