//! Main-term polynomials as residues at `z = 0`, the shifted-convolution
//! polynomial `Q`, and the `V`-cancellation between `P⁽¹⁾` and `P⁽²⁾`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{divisors, euler_phi, factorize, gcd};
use crate::chars::{gauss_sum, kronecker_character, primitive_characters, CharPairContext, Character};
use crate::error::{Error, Result};
use crate::expsums::ramanujan_sum;
use crate::lfunc::dirichlet_l;
use crate::numeric::KahanSum;
use crate::series::{
    l_series_at_1, psi_series_at, psi_value, residue_to_logpoly, vhat_series, zeta_laurent, zeta_taylor,
    zq_series, LogPolynomial, TruncatedLaurent,
};
use crate::weight::SmoothWeight;

/// Extra series terms carried so that the `z⁻¹` coefficient survives the poles.
const HEADROOM: usize = 8;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Which residue formula produced a polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    SameCharacter,
    SameModulus,
    DistinctModuli,
    Dedekind,
}

/// A main-term polynomial with the formula used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTermSpec {
    pub formula: Formula,
    pub q1: u64,
    pub q2: u64,
    pub poly: LogPolynomial,
}

impl MainTermSpec {
    /// Real coefficients of the polynomial.
    pub fn coefficients(&self) -> Vec<f64> {
        self.poly.real_coeffs()
    }

    pub fn leading(&self) -> f64 {
        self.poly.leading().re
    }
}

/// `(2π)^{-z} ζ(1+2z)^{-1} ζ(2+2z)^{-1}`, shared by all final residues.
fn common_factor(k: usize) -> Result<TruncatedLaurent> {
    let two_pi = TruncatedLaurent::pow_neg_z(2.0 * PI, k);
    let z12 = zeta_laurent(k).scale_var(2.0);
    let z22 = zeta_taylor(2.0, k).scale_var(2.0);
    two_pi.div(&z12.mul(&z22))
}

fn residue_checked(f: &TruncatedLaurent, need_pole: usize) -> Result<LogPolynomial> {
    if f.order() < -1 {
        return Err(Error::Truncation { have: f.coeffs().len(), need: need_pole });
    }
    residue_to_logpoly(f)
}

/// `q^z`.
fn pow_z(q: f64, k: usize) -> TruncatedLaurent {
    TruncatedLaurent::exp_of_z_logt(q.ln(), k)
}

/// `P_χ` for primitive `χ mod q`: residue of
/// `q^z ψ_z(q)⁶ ζ(1+z)⁶ t^z / (ψ₀(q) ψ_{2z}(q) ψ_{1+2z}(q) (2π)^z ζ(1+2z) ζ(2+2z))`.
pub fn p_same(q: u64, order: usize) -> Result<LogPolynomial> {
    let k = order + HEADROOM;
    let psi = psi_series_at(q, 0.0, 1.0, k);
    let psi0 = psi_value(q, 0.0);
    let den = psi_series_at(q, 0.0, 2.0, k).mul(&psi_series_at(q, 1.0, 2.0, k)).scale_re(psi0);
    let num = pow_z(q as f64, k).mul(&psi.powi(6)).mul(&zeta_laurent(k).powi(6));
    let f = num.div(&den)?.mul(&common_factor(k)?);
    residue_checked(&f, 5)
}

/// Closed form of the leading coefficient of `P_χ`.
pub fn leading_same_closed(q: u64) -> Result<f64> {
    let phi = euler_phi(q) as f64;
    let mut prod = 1.0;
    for p in factorize(q)?.primes() {
        prod *= 1.0 - 2.0 / (p as f64 + 1.0);
    }
    Ok(phi * phi / (q as f64 * q as f64) * prod / (2.0 * PI * PI))
}

/// Closed form of the leading coefficient of `P_{χ₁,χ₂}` for `χ₁ ≠ χ₂`.
pub fn leading_mixed_closed(ctx: &CharPairContext) -> Result<f64> {
    let psi = ctx.chi1.conj().mul(&ctx.chi2);
    let l1 = dirichlet_l(c(1.0), &psi)?;
    let (q1, q2) = (ctx.q1(), ctx.q2());
    let ratio = (euler_phi(q1) * euler_phi(q2)) as f64 / euler_phi(q1 * q2) as f64;
    let mut prod = 1.0;
    for p in factorize(q1 * q2)?.primes() {
        prod *= 1.0 - 1.0 / (p as f64 + 1.0);
    }
    Ok(6.0 / (PI * PI) * l1.norm_sqr() * ratio * prod)
}

/// Extra constant of the same-modulus formula; vanishes for opposite parities.
pub fn same_modulus_constant(ctx: &CharPairContext) -> Result<f64> {
    let q = ctx.q1() as f64;
    let g1 = gauss_sum(&ctx.chi1, 1);
    let g2 = gauss_sum(&ctx.chi2, 1);
    let a = ctx.chi1.mul(&ctx.chi2.conj());
    let b = a.conj();
    let la = dirichlet_l(c(1.0), &a)?;
    let lb = dirichlet_l(c(1.0), &b)?;
    let la2 = dirichlet_l(c(2.0), &a.pow(2))?;
    let lb2 = dirichlet_l(c(2.0), &b.pow(2))?;
    let sign = (ctx.chi1.sign() * ctx.chi2.sign()) as f64;
    let term1 = g1.conj() * g2 / q * la.powi(4) / la2;
    let term2 = sign * g1 * g2.conj() / q * lb.powi(4) / lb2;
    Ok((term1 + term2).re)
}

/// `L(1+z, χ̄₁χ₂) L(1+z, χ₁χ̄₂)`.
fn l_product(ctx: &CharPairContext, k: usize) -> Result<TruncatedLaurent> {
    let a = ctx.chi1.conj().mul(&ctx.chi2);
    let b = ctx.chi1.mul(&ctx.chi2.conj());
    Ok(l_series_at_1(&a, k)?.mul(&l_series_at_1(&b, k)?))
}

/// `P_{χ₁,χ₂}` for distinct primitive characters.
pub fn p_mixed(ctx: &CharPairContext, order: usize) -> Result<MainTermSpec> {
    if ctx.same_character() {
        return Err(Error::Domain("identical characters: use the same-character formula".into()));
    }
    let k = order + HEADROOM;
    let (q1, q2) = (ctx.q1(), ctx.q2());
    let zeta4 = zeta_laurent(k).powi(4);
    let common = common_factor(k)?.mul(&zeta4).mul(&l_product(ctx, k)?);
    if q1 == q2 {
        let psi = psi_series_at(q1, 0.0, 1.0, k);
        let psi0 = psi_value(q1, 0.0);
        let den = psi_series_at(q1, 1.0, 2.0, k).mul(&psi_series_at(q1, 0.0, 2.0, k)).scale_re(psi0);
        let f = pow_z(q1 as f64, k).mul(&psi.powi(4)).div(&den)?.mul(&common);
        let mut poly = residue_checked(&f, 3)?;
        let extra = same_modulus_constant(ctx)?;
        poly = poly.add(&LogPolynomial::from_real(&[extra]));
        return Ok(MainTermSpec { formula: Formula::SameModulus, q1, q2, poly });
    }
    let p1 = psi_series_at(q1, 0.0, 1.0, k);
    let p2 = psi_series_at(q2, 0.0, 1.0, k);
    let d1 = pow_z(q1 as f64, k).mul(&psi_series_at(q1, 0.0, 2.0, k)).scale_re(psi_value(q2, 0.0));
    let d2 = pow_z(q2 as f64, k).mul(&psi_series_at(q2, 0.0, 2.0, k)).scale_re(psi_value(q1, 0.0));
    let den = d1.add(&d2).mul(&psi_series_at(q1 * q2, 1.0, 2.0, k));
    let num = pow_z((q1 * q2) as f64, k).mul(&p1.powi(2)).mul(&p2.powi(2)).scale_re(2.0);
    let f = num.div(&den)?.mul(&common);
    let poly = residue_checked(&f, 3)?;
    let formula = if q1 == 1 || q2 == 1 { Formula::Dedekind } else { Formula::DistinctModuli };
    Ok(MainTermSpec { formula, q1, q2, poly })
}

/// `P_K` for the quadratic field of fundamental discriminant `d`.
pub fn p_dedekind(d: i64, order: usize) -> Result<MainTermSpec> {
    let chi = kronecker_character(d)?;
    let ctx = CharPairContext::new(Character::principal(1), chi)?;
    let mut spec = p_mixed(&ctx, order)?;
    spec.formula = Formula::Dedekind;
    Ok(spec)
}

/// Leading constant of `P_K`: `6/π² |L(1, χ_D)|² Π_{p|D} (1 - 1/(p+1))`.
pub fn leading_dedekind_closed(d: i64) -> Result<f64> {
    let chi = kronecker_character(d)?;
    let l1 = dirichlet_l(c(1.0), &chi)?;
    let mut prod = 1.0;
    for p in factorize(d.unsigned_abs())?.primes() {
        prod *= 1.0 - 1.0 / (p as f64 + 1.0);
    }
    Ok(6.0 / (PI * PI) * l1.norm_sqr() * prod)
}

/// Main-term polynomial for any pair of primitive characters.
pub fn main_term(ctx: &CharPairContext, order: usize) -> Result<MainTermSpec> {
    if ctx.same_character() {
        let q = ctx.q1();
        return Ok(MainTermSpec { formula: Formula::SameCharacter, q1: q, q2: q, poly: p_same(q, order)? });
    }
    p_mixed(ctx, order)
}

/// Polynomial in `(X₁, X₂)` of degree at most 2: `coeffs[i][j]` multiplies `X₁^i X₂^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPolynomial {
    pub coeffs: [[Complex64; 3]; 3],
}

impl QPolynomial {
    pub fn constant(v: Complex64) -> Self {
        let mut coeffs = [[c(0.0); 3]; 3];
        coeffs[0][0] = v;
        Self { coeffs }
    }

    pub fn eval(&self, x1: f64, x2: f64) -> Complex64 {
        let mut acc = c(0.0);
        for i in 0..3 {
            for j in 0..3 {
                acc += self.coeffs[i][j] * x1.powi(i as i32) * x2.powi(j as i32);
            }
        }
        acc
    }

    /// Coefficient of `X₁X₂`.
    pub fn cross(&self) -> Complex64 {
        self.coeffs[1][1]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (self.coeffs[i][j] - self.coeffs[j][i]).norm() <= tol))
    }
}

/// `Σ_{h₁|h, (h₁,q)=1} h₁^{-1-2u}` as a series in `u`.
fn coprime_divisor_series(h: u64, q: u64, k: usize) -> TruncatedLaurent {
    let mut acc = vec![c(0.0); k + 1];
    for d in divisors(h) {
        if gcd(d, q) != 1 {
            continue;
        }
        let ld = (d as f64).ln();
        let mut term = c(1.0 / d as f64);
        for (j, slot) in acc.iter_mut().enumerate() {
            if j > 0 {
                term = term * (-2.0 * ld) / j as f64;
            }
            *slot += term;
        }
    }
    TruncatedLaurent::taylor(acc)
}

/// `Σ_{(c,q)=1} r_c(h) c^{-2-2u}` as a series in `u`, via
/// `(Σ_{h₁|h,(h₁,q)=1} h₁^{-1-2u}) / (ψ_{1+2u}(q) ζ(2+2u))`.
pub fn ramanujan_c_series(h: u64, q: u64, k: usize) -> Result<TruncatedLaurent> {
    let den = psi_series_at(q, 1.0, 2.0, k).mul(&zeta_taylor(2.0, k).scale_var(2.0));
    coprime_divisor_series(h, q, k).div(&den)
}

/// `Σ_{c ≤ c_max, (c,q)=1} r_c(h) c^{-s}` by direct summation.
pub fn ramanujan_c_sum_direct(h: i64, q: u64, s: f64, c_max: u64) -> f64 {
    let mut acc = KahanSum::new();
    for cc in (1..=c_max).rev() {
        if gcd(cc, q) != 1 {
            continue;
        }
        acc.add(ramanujan_sum(cc, h) as f64 * (cc as f64).powf(-s));
    }
    acc.value()
}

/// `Σ_c r_c(h) ψ(c) c^{-2} = Σ_{d|h} ψ(d) d^{-1} / L(2, ψ)`.
fn twisted_c_sum(h: u64, psi: &Character) -> Result<Complex64> {
    let num: Complex64 = divisors(h).into_iter().map(|d| psi.value_u(d) / d as f64).sum();
    Ok(num / dirichlet_l(c(2.0), psi)?)
}

/// `Σ_{(c,q₁)=1} r_{c q₂}(h) / (c² q₂)`, split into the part of `c` built from
/// primes of `q₂` (a finite sum) and the part coprime to `q₁q₂`.
fn shifted_ramanujan_sum(h: u64, q1: u64, q2: u64) -> Result<f64> {
    let coprime = ramanujan_c_series(h, q1 * q2, 0)?.coeff(0).unwrap().re;
    let primes: Vec<u64> = factorize(q2)?.primes().filter(|p| q1 % p != 0).collect();
    // r_{c''q₂}(h) vanishes once p^{v_p(c''q₂)-1} ∤ h
    let mut finite = KahanSum::new();
    let mut stack = vec![(1u64, 0usize)];
    while let Some((m, idx)) = stack.pop() {
        let r = ramanujan_sum(m * q2, h as i64);
        finite.add(r as f64 / (m as f64 * m as f64));
        for (j, &p) in primes.iter().enumerate().skip(idx) {
            let next = m * p;
            let mq = next * q2;
            let vp = {
                let mut v = 0;
                let mut x = mq;
                while x % p == 0 {
                    x /= p;
                    v += 1;
                }
                v
            };
            if (h % p.pow(vp - 1)) == 0 {
                stack.push((next, j));
            }
        }
    }
    Ok(coprime * finite.value() / q2 as f64)
}

/// `Q_{χ₁,χ₂}(X₁, X₂; h)`.
pub fn q_poly(h: i64, ctx: &CharPairContext) -> Result<QPolynomial> {
    if h == 0 {
        return Err(Error::Domain("Q is defined for h ≠ 0".into()));
    }
    let ha = h.unsigned_abs();
    let (q1, q2) = (ctx.q1(), ctx.q2());
    if ctx.same_character() {
        let q = q1;
        let k = 4;
        let zq = zq_series(q, k);
        let psi0 = zq.coeff(0).unwrap().re;
        let z1 = zq.coeff(1).unwrap().re;
        let g = ramanujan_c_series(ha, q, k)?.scale_re(ramanujan_sum(q, h) as f64 / q as f64);
        let g0 = g.coeff(0).unwrap();
        let g1 = g.coeff(1).unwrap();
        let g2 = g.coeff(2).unwrap() * 2.0;
        // ∂₁∂₂ [a(z₁) b(z₂) g(z₁+z₂)] with a'(0) = ψ₀X₁ + 2Z'(0), b'(0) = ψ₀X₂ + 2Z'(0)
        let mut coeffs = [[c(0.0); 3]; 3];
        coeffs[1][1] = g0 * psi0 * psi0;
        coeffs[1][0] = g0 * psi0 * 2.0 * z1 + g1 * psi0 * psi0;
        coeffs[0][1] = coeffs[1][0];
        coeffs[0][0] = g0 * 4.0 * z1 * z1 + g1 * psi0 * 4.0 * z1 + g2 * psi0 * psi0;
        return Ok(QPolynomial { coeffs });
    }
    let a = ctx.chi1.mul(&ctx.chi2.conj());
    let b = a.conj();
    let la = dirichlet_l(c(1.0), &a)?;
    let lb = dirichlet_l(c(1.0), &b)?;
    if q1 == q2 {
        let base = 2.0 * la.norm_sqr() * ramanujan_sum(q1, h) as f64 / q1 as f64
            * ramanujan_c_series(ha, q1, 0)?.coeff(0).unwrap().re;
        let g1 = gauss_sum(&ctx.chi1, 1);
        let g2 = gauss_sum(&ctx.chi2, 1);
        let t1 = lb * lb * gauss_sum(&b, h) / (g1.conj() * g2) * twisted_c_sum(ha, &b.pow(2))?;
        let t2 = la * la * gauss_sum(&a, h) / (g1 * g2.conj()) * twisted_c_sum(ha, &a.pow(2))?;
        return Ok(QPolynomial::constant(c(base) + t1 + t2));
    }
    let v = lb.norm_sqr() * shifted_ramanujan_sum(ha, q1, q2)? + la.norm_sqr() * shifted_ramanujan_sum(ha, q2, q1)?;
    Ok(QPolynomial::constant(c(v)))
}

/// Direct truncation of the two c-sums of the distinct-moduli constant.
pub fn shifted_ramanujan_sum_direct(h: u64, q1: u64, q2: u64, c_max: u64) -> f64 {
    let mut acc = KahanSum::new();
    for cc in (1..=c_max).rev() {
        if gcd(cc, q1) != 1 {
            continue;
        }
        acc.add(ramanujan_sum(cc * q2, h as i64) as f64 / (cc as f64 * cc as f64));
    }
    acc.value() / q2 as f64
}

/// Shared by tests of the distinct-moduli constant.
pub fn shifted_ramanujan_sum_closed(h: u64, q1: u64, q2: u64) -> Result<f64> {
    shifted_ramanujan_sum(h, q1, q2)
}

/// `T(z) = Σ |τ(n)|² n^{-1-z}` as a Laurent series.
fn t_series(ctx: &CharPairContext, k: usize) -> Result<TruncatedLaurent> {
    let (q1, q2) = (ctx.q1(), ctx.q2());
    let num = psi_series_at(q1, 0.0, 1.0, k)
        .mul(&psi_series_at(q2, 0.0, 1.0, k))
        .mul(&zeta_laurent(k).powi(2))
        .mul(&l_product(ctx, k)?);
    let den = psi_series_at(q1 * q2, 1.0, 2.0, k).mul(&zeta_taylor(2.0, k).scale_var(2.0));
    num.div(&den)
}

/// `P⁽¹⁾ = Res V̂(z) T(z) t^z`.
pub fn p1_poly(ctx: &CharPairContext, v: &SmoothWeight, order: usize) -> Result<LogPolynomial> {
    let k = order + HEADROOM;
    let f = vhat_series(v, k)?.mul(&t_series(ctx, k)?);
    residue_checked(&f, 5)
}

/// `P⁽²⁾ = 2 Res Z_q(z)⁴ A(z)/B(z) t^z / z³` for `χ₁ = χ₂ mod q`, with
/// `A = Z_q(z)²/(2z²) - ψ₀ Z_q(2z) V̂(z)/(2z)` and `B = ψ_{1+2z} ζ(2+2z) ψ₀ Z_q(2z)`.
pub fn p2_poly(q: u64, v: &SmoothWeight, order: usize) -> Result<LogPolynomial> {
    let k = order + HEADROOM;
    let z = zq_series(q, k);
    let z2 = z.scale_var(2.0);
    let psi0 = psi_value(q, 0.0);
    let vhat = vhat_series(v, k)?;
    let a = z.powi(2).shift(-2).scale_re(0.5).sub(&z2.mul(&vhat).shift(-1).scale_re(0.5 * psi0));
    let b = psi_series_at(q, 1.0, 2.0, k).mul(&zeta_taylor(2.0, k).scale_var(2.0)).mul(&z2).scale_re(psi0);
    let f = z.powi(4).mul(&a.div(&b)?).shift(-3).scale_re(2.0);
    residue_checked(&f, 5)
}

/// Result of the `V`-cancellation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationCheck {
    pub q: u64,
    pub widths: Vec<f64>,
    /// Largest coefficient deviation of `2Re(P⁽¹⁾ + P⁽²⁾)` (shifted to `log t`) from `P_χ`.
    pub residual: f64,
    /// Spread of the `(log t)⁴` coefficient of `P⁽¹⁾` across the weights.
    pub p1_leading_spread: f64,
    /// Spread of the lower `P⁽¹⁾` coefficients across weights (nonzero: they depend on `V`).
    pub p1_lower_spread: f64,
}

/// Assembles `2 Re(P⁽¹⁾ + P⁽²⁾)(log(q t / 2π))` for each weight and compares with `P_χ`.
pub fn verify_v_cancellation(q: u64, weights: &[SmoothWeight], order: usize) -> Result<CancellationCheck> {
    let chi = if q == 1 {
        Character::principal(1)
    } else {
        primitive_characters(q)
            .into_iter()
            .next()
            .ok_or_else(|| Error::Domain(format!("no primitive character mod {q}")))?
    };
    let ctx = CharPairContext::new(chi.clone(), chi)?;
    let target = p_same(q, order)?;
    let shift = (q as f64 / (2.0 * PI)).ln();
    let mut residual: f64 = 0.0;
    let mut p1s = Vec::new();
    for v in weights {
        let p1 = p1_poly(&ctx, v, order)?;
        let p2 = p2_poly(q, v, order)?;
        let assembled = p1.add(&p2).shift(shift).two_re();
        residual = residual.max(assembled.max_abs_diff(&target));
        p1s.push(p1);
    }
    let spread = |j: usize| {
        let vals: Vec<f64> = p1s.iter().map(|p| p.coeff(j).re).collect();
        vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min)
    };
    let lower = (0..4).map(spread).fold(0.0, f64::max);
    Ok(CancellationCheck {
        q,
        widths: weights.iter().map(|v| v.width()).collect(),
        residual,
        p1_leading_spread: spread(4),
        p1_lower_spread: lower,
    })
}

/// Largest coefficient change of `P_χ` (or the pair's polynomial) when the
/// truncation order is doubled.
pub fn order_stability(ctx: &CharPairContext, order: usize) -> Result<f64> {
    let a = main_term(ctx, order)?.poly;
    let b = main_term(ctx, 2 * order)?.poly;
    Ok(a.max_abs_diff(&b))
}

/// Whether `(χ₁, χ₂)` with `q₁ = q₂` have matching parity (the extra constant survives).
pub fn same_parity(ctx: &CharPairContext) -> bool {
    ctx.chi1.kappa() == ctx.chi2.kappa()
}
