//! Ramanujan, Kloosterman and Gauss-type exponential sums, the twisted
//! divisor sums `τ̂` and `T`, and the Kloosterman-sum evaluation of `K^±`.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, divisors, gcd, gcd_i, lcm, mod_inverse, rem};
use crate::chars::{e_frac, enumerate_characters, gauss_sum, unit, CharPairContext, Character};
use crate::error::{Error, Result};
use crate::numeric::ComplexKahan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn both() -> [Sign; 2] {
        [Sign::Plus, Sign::Minus]
    }
}

/// `r_q(h) = Σ_{d | (h, q)} μ(q/d) d`.
pub fn ramanujan_sum(q: u64, h: i64) -> i64 {
    let g = gcd(h.unsigned_abs(), q);
    divisors(g)
        .into_iter()
        .map(|d| arith::mobius(q / d) * d as i64)
        .sum()
}

/// `r_q(h)` as the exponential sum over reduced residues.
pub fn ramanujan_sum_exponential(q: u64, h: i64) -> Complex64 {
    let mut acc = ComplexKahan::new();
    for a in 0..q {
        if gcd(a, q) == 1 {
            acc.add(e_frac(mul_i(a as i64, h, q), q));
        }
    }
    acc.value()
}

#[inline]
fn mul_i(a: i64, b: i64, m: u64) -> i64 {
    ((a as i128 * b as i128).rem_euclid(m as i128)) as i64
}

/// Inputs of a (possibly twisted) Kloosterman sum.
#[derive(Debug, Clone)]
pub struct KloostermanQuery {
    pub m: i64,
    pub n: i64,
    pub c: u64,
    pub psi: Option<Character>,
}

impl KloostermanQuery {
    pub fn eval(&self) -> Result<Complex64> {
        match &self.psi {
            None => Ok(kloosterman(self.m, self.n, self.c)),
            Some(psi) => twisted_kloosterman(psi, self.m, self.n, self.c),
        }
    }
}

/// `S(m, n; c)`.
pub fn kloosterman(m: i64, n: i64, c: u64) -> Complex64 {
    let mut acc = ComplexKahan::new();
    for a in 0..c {
        if let Some(ab) = unit_inverse(a, c) {
            acc.add(e_frac(mul_i(m, a as i64, c) + mul_i(n, ab as i64, c), c));
        }
    }
    acc.value()
}

fn unit_inverse(a: u64, c: u64) -> Option<u64> {
    if gcd(a, c) != 1 {
        return None;
    }
    mod_inverse(a as i64, c)
}

/// `S_ψ(m, n; c) = Σ_a ψ(a) e((ma + nā)/c)` for `ψ` modulo a divisor of `c`.
pub fn twisted_kloosterman(psi: &Character, m: i64, n: i64, c: u64) -> Result<Complex64> {
    if c == 0 || c % psi.modulus() != 0 {
        return Err(Error::Domain(format!(
            "character modulus {} does not divide {c}",
            psi.modulus()
        )));
    }
    let mut acc = ComplexKahan::new();
    for a in 0..c {
        if let Some(ab) = unit_inverse(a, c) {
            acc.add(psi.value_u(a) * e_frac(mul_i(m, a as i64, c) + mul_i(n, ab as i64, c), c));
        }
    }
    Ok(acc.value())
}

/// `(1/φ(q₀)) Σ_{ψ mod q₀} |S_ψ(m, n; c)|²`.
pub fn avg_twisted_kloosterman_sq(q0: u64, m: i64, n: i64, c: u64) -> Result<f64> {
    if q0 == 0 || c == 0 || c % q0 != 0 {
        return Err(Error::Domain(format!("{q0} does not divide {c}")));
    }
    let terms: Vec<(u64, Complex64)> = (0..c)
        .filter_map(|a| {
            unit_inverse(a, c)
                .map(|ab| (a, e_frac(mul_i(m, a as i64, c) + mul_i(n, ab as i64, c), c)))
        })
        .collect();
    let chars = enumerate_characters(q0);
    let mut total = crate::numeric::KahanSum::new();
    for psi in &chars {
        let s: ComplexKahan = terms.iter().map(|&(a, z)| psi.value_u(a) * z).collect();
        total.add(s.value().norm_sqr());
    }
    Ok(total.value() / chars.len() as f64)
}

/// `τ̂(n; a/c)` by the defining double sum over `b₁ mod [c,q₁]`, `b₂ mod [c,q₂]`.
pub fn hat_tau_direct(n: u64, a: i64, c: u64, chi1: &Character, chi2: &Character) -> Result<Complex64> {
    check_hat_tau_args(n, a, c)?;
    let c1 = lcm(c, chi1.modulus());
    let c2 = lcm(c, chi2.modulus());
    let den = (c1 * c2) as i128;
    let scale = (den / c as i128) * a.rem_euclid(c as i64) as i128;
    let mut acc = ComplexKahan::new();
    for n1 in divisors(n) {
        let n2 = n / n1;
        for b1 in 0..c1 {
            let v1 = chi1.value_u(b1);
            if v1.norm_sqr() == 0.0 {
                continue;
            }
            for b2 in 0..c2 {
                let v2 = chi2.value_u(b2);
                if v2.norm_sqr() == 0.0 {
                    continue;
                }
                let num = (scale * b1 as i128 * b2 as i128
                    + n1 as i128 * b1 as i128 * c2 as i128
                    + n2 as i128 * b2 as i128 * c1 as i128)
                    .rem_euclid(den);
                acc.add(v1 * v2 * unit(num as f64 / den as f64));
            }
        }
    }
    Ok(acc.value() / ((c1 * c2) as f64).sqrt())
}

fn check_hat_tau_args(n: u64, a: i64, c: u64) -> Result<()> {
    if c == 0 {
        return Err(Error::Domain("c must be positive".into()));
    }
    if gcd_i(a, c as i64) != 1 {
        return Err(Error::Domain(format!("gcd({a}, {c}) > 1")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    Ok(())
}

/// Fast evaluator of `n ↦ τ̂(n; a/c)`.
///
/// The inner character sum modulo `[c, q_i]` collapses to a scaled Gauss sum
/// modulo `q_i`, leaving one loop over the smaller of the two moduli.
#[derive(Debug, Clone)]
pub struct HatTau {
    swapped: bool,
    outer: Vec<Complex64>,
    outer_modulus: u64,
    roots: Vec<Complex64>,
    inner_gauss: Vec<Complex64>,
    inner_modulus: u64,
    inner_q: u64,
    a_scaled: u64,
    norm: f64,
}

impl HatTau {
    pub fn new(a: i64, c: u64, chi1: &Character, chi2: &Character) -> Result<Self> {
        check_hat_tau_args(1, a, c)?;
        let c1 = lcm(c, chi1.modulus());
        let c2 = lcm(c, chi2.modulus());
        let swapped = c1 < c2;
        let (chi_o, co, chi_i, ci) = if swapped {
            (chi1, c1, chi2, c2)
        } else {
            (chi2, c2, chi1, c1)
        };
        let qi = chi_i.modulus();
        let outer = (0..co).map(|b| chi_o.value_u(b)).collect();
        let roots = (0..co).map(|k| e_frac(k as i64, co)).collect();
        let inner_gauss = (0..qi).map(|k| gauss_sum(chi_i, k as i64)).collect();
        let a_scaled = arith::mul_mod(rem(a, ci), ci / c, ci);
        Ok(HatTau {
            swapped,
            outer,
            outer_modulus: co,
            roots,
            inner_gauss,
            inner_modulus: ci,
            inner_q: qi,
            a_scaled,
            norm: 1.0 / ((c1 * c2) as f64).sqrt(),
        })
    }

    pub fn eval(&self, n: u64) -> Complex64 {
        let co = self.outer_modulus;
        let ci = self.inner_modulus;
        let r = ci / self.inner_q;
        let mut acc = ComplexKahan::new();
        for d in divisors(n) {
            let (n_i, n_o) = if self.swapped { (n / d, d) } else { (d, n / d) };
            let n_i = n_i % ci;
            let n_o = n_o % co;
            for b in 0..co {
                let v = self.outer[b as usize];
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                let h = (arith::mul_mod(self.a_scaled, b, ci) + n_i) % ci;
                if h % r != 0 {
                    continue;
                }
                let g = self.inner_gauss[((h / r) % self.inner_q) as usize];
                let phase = self.roots[arith::mul_mod(n_o, b, co) as usize];
                acc.add(v * phase * g);
            }
        }
        acc.value() * (r as f64 * self.norm)
    }
}

/// `τ̂(n; a/c)` via [`HatTau`].
pub fn hat_tau(n: u64, a: i64, c: u64, chi1: &Character, chi2: &Character) -> Result<Complex64> {
    check_hat_tau_args(n, a, c)?;
    Ok(HatTau::new(a, c, chi1, chi2)?.eval(n))
}

/// All `T(n; c, h)` for one modulus `c`, built from the `τ̂(n; a/c)` with `(a, c) = 1`.
#[derive(Debug, Clone)]
pub struct TSums {
    c: u64,
    hats: Vec<(u64, HatTau)>,
}

impl TSums {
    pub fn new(c: u64, chi1: &Character, chi2: &Character) -> Result<Self> {
        if c == 0 {
            return Err(Error::Domain("c must be positive".into()));
        }
        let hats = (0..c)
            .filter(|&a| gcd(a, c) == 1)
            .map(|a| HatTau::new(a as i64, c, chi1, chi2).map(|h| (a, h)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TSums { c, hats })
    }

    pub fn modulus(&self) -> u64 {
        self.c
    }

    /// `[T(n; c, h) for h in 0..c]`.
    pub fn row(&self, n: u64) -> Vec<Complex64> {
        let c = self.c;
        let vals: Vec<(u64, Complex64)> = self.hats.iter().map(|(a, h)| (*a, h.eval(n))).collect();
        let s = 1.0 / (c as f64).sqrt();
        (0..c)
            .map(|h| {
                let acc: ComplexKahan = vals
                    .iter()
                    .map(|&(a, v)| e_frac(-(arith::mul_mod(h, a, c) as i64), c) * v)
                    .collect();
                acc.value() * s
            })
            .collect()
    }

    pub fn eval(&self, n: u64, h: i64) -> Complex64 {
        let c = self.c;
        let s = 1.0 / (c as f64).sqrt();
        let acc: ComplexKahan = self
            .hats
            .iter()
            .map(|(a, ht)| e_frac(-mul_i(h, *a as i64, c), c) * ht.eval(n))
            .collect();
        acc.value() * s
    }
}

/// `T(n; c, h) = c^{-1/2} Σ_{(a,c)=1} e(-ha/c) τ̂(n; a/c)`.
pub fn t_sum(n: u64, c: u64, h: i64, chi1: &Character, chi2: &Character) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    Ok(TSums::new(c, chi1, chi2)?.eval(n, h))
}

/// `K^±` from a precomputed row `T(m; c, ·)`.
fn k_from_row(row: &[Complex64], n: u64, h: i64, chi2: &Character, sign: Sign) -> Complex64 {
    let c = row.len() as u64;
    let q2 = chi2.modulus();
    let mut acc = ComplexKahan::new();
    for a2 in 0..q2 {
        let v = chi2.value_u(a2).conj();
        if v.norm_sqr() == 0.0 {
            continue;
        }
        let f = sign.as_i64() * (n as i64 * a2 as i64 - h);
        acc.add(v * row[rem(f, c) as usize]);
    }
    acc.value() / (q2 as f64).sqrt()
}

/// `K^±(m, n, h, c) = q₂^{-1/2} Σ_{a₂ mod q₂} χ̄₂(a₂) T(m; c, ±(n a₂ - h))`.
pub fn k_pm(
    m: u64,
    n: u64,
    h: i64,
    c: u64,
    chi1: &Character,
    chi2: &Character,
    sign: Sign,
) -> Result<Complex64> {
    if m == 0 || n == 0 {
        return Err(Error::Domain("m and n must be positive".into()));
    }
    let row = TSums::new(c, chi1, chi2)?.row(m);
    Ok(k_from_row(&row, n, h, chi2, sign))
}

/// Prefactor convention for the closed form of `K^±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrefactorSign {
    /// `χ₂(±1)`, which matches direct evaluation.
    Corrected,
    /// `χ₂(∓1)` as usually displayed; off by `χ₂(-1)`.
    Displayed,
}

fn kappa_pair(ctx: &CharPairContext) -> Complex64 {
    let l = lcm(ctx.q1_star(), ctx.q2_star());
    let circ = ctx.chi1_circ.mul(&ctx.chi2_circ.conj());
    let star = ctx.chi1_star.mul(&ctx.chi2_star.conj());
    let qo = ctx.q1_circ() * ctx.q2_circ();
    star.value_u(qo) * circ.value_u(l) * gauss_sum(&circ, 1) / (qo as f64).sqrt()
}

/// The exponential sum `E_{χ₁,χ₂}(m; ψ)` for `ψ` modulo `q₂★/h★`.
pub fn e_sum(m: u64, psi: &Character, ctx: &CharPairContext, h_star: u64) -> Result<Complex64> {
    let q2s = ctx.q2_star();
    if h_star == 0 || q2s % h_star != 0 {
        return Err(Error::Domain(format!("h★ = {h_star} does not divide q₂★ = {q2s}")));
    }
    if psi.modulus() != q2s / h_star {
        return Err(Error::Domain(format!(
            "ψ must have modulus {}, got {}",
            q2s / h_star,
            psi.modulus()
        )));
    }
    if m == 0 {
        return Err(Error::Domain("m must be positive".into()));
    }
    Ok(ESum::new(psi, ctx).eval(m))
}

struct ESum {
    prefactor: Complex64,
    circ: Character,
    gauss_char: Character,
    pc: Character,
    chi2s_conj: Character,
    norm: f64,
}

impl ESum {
    fn new(psi: &Character, ctx: &CharPairContext) -> Self {
        let q2s = ctx.q2_star();
        let l = lcm(ctx.q1_star(), q2s);
        let big_m = psi.modulus();
        let arg = ctx.q1_circ() * ctx.q2_circ() * ctx.q2_circ();
        let prefactor = psi.value_u(arg).conj() * gauss_sum(psi, 1).conj() / (big_m as f64).sqrt();
        ESum {
            prefactor,
            circ: ctx.chi1_circ.conj().mul(&ctx.chi2_circ),
            gauss_char: ctx.chi1_star.mul(&ctx.chi2_star.mul(psi).conj()),
            pc: psi.mul(&ctx.chi2_star),
            chi2s_conj: ctx.chi2_star.conj(),
            norm: 1.0 / ((q2s * l) as f64).sqrt(),
        }
    }

    fn eval(&self, m: u64) -> Complex64 {
        let acc: ComplexKahan = divisors(m).into_iter().map(|m1| self.term(m1, m / m1)).collect();
        self.prefactor * acc.value()
    }

    /// Summand of the `m₁ m₂ = m` convolution, without the ψ prefactor.
    fn term(&self, m1: u64, m2: u64) -> Complex64 {
        let w = self.circ.value_u(m1);
        if w.norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let q2s = self.chi2s_conj.modulus();
        let g = gauss_sum(&self.gauss_char, m1 as i64);
        let inner: ComplexKahan = (0..q2s)
            .map(|a| self.pc.value_u(a) * self.chi2s_conj.value_u(a + m2))
            .collect();
        w * g * self.norm * inner.value()
    }

    /// Common period of [`ESum::term`] in each argument.
    #[cfg(test)]
    fn period(&self) -> u64 {
        lcm(lcm(self.circ.modulus(), self.gauss_char.modulus()), self.chi2s_conj.modulus())
    }
}

/// Closed-form side of the Kloosterman evaluation of `K^±`, with cached `E` values.
pub struct Lemma421 {
    ctx: CharPairContext,
    kappa: Complex64,
    /// For each `h★ | q₂★`: the characters mod `q₂★/h★` and `E(m; ψ)` for `m ≤ m_cache`.
    psis: HashMap<u64, Vec<(Character, Vec<Complex64>)>>,
    m_cache: u64,
}

impl Lemma421 {
    pub fn new(ctx: &CharPairContext, m_cache: u64) -> Self {
        let q2s = ctx.q2_star();
        let psis = divisors(q2s)
            .into_iter()
            .map(|hs| {
                let list = enumerate_characters(q2s / hs)
                    .into_iter()
                    .map(|psi| {
                        let e = ESum::new(&psi, ctx);
                        let vals = (1..=m_cache).map(|m| e.eval(m)).collect();
                        (psi, vals)
                    })
                    .collect();
                (hs, list)
            })
            .collect();
        Lemma421 {
            ctx: ctx.clone(),
            kappa: kappa_pair(ctx),
            psis,
            m_cache,
        }
    }

    /// Whether `K^±(·, ·, ·, c)` is forced to vanish, i.e. `(c, q₁q₂) ≠ q₂`.
    pub fn vanishes(&self, c: u64) -> bool {
        gcd(c, self.ctx.q1() * self.ctx.q2()) != self.ctx.q2()
    }

    pub fn closed_form(
        &self,
        m: u64,
        n: u64,
        h: i64,
        c: u64,
        sign: Sign,
        convention: PrefactorSign,
    ) -> Result<Complex64> {
        let ctx = &self.ctx;
        if self.vanishes(c) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let (q2, q2s) = (ctx.q2(), ctx.q2_star());
        if h <= 0 {
            return Err(Error::Domain("h must be positive".into()));
        }
        let hs = gcd(h as u64, q2s);
        let ho = h / hs as i64;
        let cm = c / q2s;
        let s = sign.as_i64();
        let inv = mod_inverse((q2s * lcm(ctx.q1(), q2s)) as i64, cm)
            .ok_or_else(|| Error::Domain(format!("no inverse modulo {cm}")))?;
        let kk = kloosterman(-s * h, mul_i(inv as i64, m as i64, cm), cm) / (cm as f64).sqrt();
        let twist = ctx.chi1.conj().mul(&ctx.chi2);
        let mut acc = ComplexKahan::new();
        let list = &self.psis[&hs];
        for (psi, cached) in list {
            let e = if m <= self.m_cache {
                cached[(m - 1) as usize]
            } else {
                ESum::new(psi, ctx).eval(m)
            };
            let p2 = psi.value_u(c / q2);
            acc.add(psi.value(-s * ho) * e * (p2 * p2).conj());
        }
        let pre_sign = match convention {
            PrefactorSign::Corrected => ctx.chi2.value(s),
            PrefactorSign::Displayed => ctx.chi2.value(-s),
        };
        let factor = pre_sign
            * ctx.chi1.value_u(n)
            * self.kappa
            * ((q2s / hs) as f64).sqrt()
            / list.len() as f64
            * twist.value_u(n * q2 / c)
            * kk;
        Ok(factor * acc.value())
    }
}

/// Outcome of one direct-versus-closed-form comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma421Check {
    pub direct: Complex64,
    pub closed: Complex64,
    pub residual: f64,
    /// `(c, q₁q₂) ≠ q₂`: the closed form is zero and only the direct side is summed.
    pub vanishing: bool,
}

fn check_lemma421_args(n: u64, c: u64, ctx: &CharPairContext) -> Result<()> {
    if n == 0 || c == 0 {
        return Err(Error::Domain("n and c must be positive".into()));
    }
    if gcd(n, ctx.q1()) != 1 {
        return Err(Error::Domain(format!("gcd(n, q₁) = gcd({n}, {}) > 1", ctx.q1())));
    }
    if (n * ctx.q2()) % c != 0 {
        return Err(Error::Domain(format!("c = {c} does not divide n q₂ = {}", n * ctx.q2())));
    }
    Ok(())
}

/// Compares direct `K^±(m, n, h, c)` with its Kloosterman-sum closed form.
pub fn verify_lemma421(
    m: u64,
    n: u64,
    h: i64,
    c: u64,
    ctx: &CharPairContext,
    sign: Sign,
    convention: PrefactorSign,
) -> Result<Lemma421Check> {
    check_lemma421_args(n, c, ctx)?;
    let direct = k_pm(m, n, h, c, &ctx.chi1, &ctx.chi2, sign)?;
    let engine = Lemma421::new(ctx, m);
    let closed = engine.closed_form(m, n, h, c, sign, convention)?;
    Ok(Lemma421Check {
        direct,
        closed,
        residual: (direct - closed).norm(),
        vanishing: engine.vanishes(c),
    })
}

/// Summary of a grid sweep of [`verify_lemma421`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lemma421Grid {
    pub pairs: usize,
    pub evaluated: usize,
    pub vanishing: usize,
    /// Largest `|direct - closed|` over non-vanishing tuples.
    pub max_residual: f64,
    /// Largest `|direct|` over vanishing tuples.
    pub max_vanishing: f64,
    /// Largest `|direct|` seen, for scale.
    pub max_direct: f64,
    pub worst: Option<String>,
}

/// Every pair of primitive characters with moduli `≤ q_max`, every `n, m, h ≤ v_max`
/// with `(n, q₁) = 1`, every `c | n q₂` with `c ≤ c_max`, both signs.
pub fn lemma421_grid(q_max: u64, c_max: u64, v_max: u64, convention: PrefactorSign) -> Result<Lemma421Grid> {
    let chars: Vec<Character> = (1..=q_max).flat_map(crate::chars::primitive_characters).collect();
    let pairs: Vec<(usize, usize)> = (0..chars.len())
        .flat_map(|i| (0..chars.len()).map(move |j| (i, j)))
        .collect();
    let parts = pairs
        .par_iter()
        .map(|&(i, j)| {
            let ctx = CharPairContext::new(chars[i].clone(), chars[j].clone())?;
            lemma421_pair(&ctx, c_max, v_max, convention)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Lemma421Grid {
        pairs: parts.len(),
        ..Default::default()
    };
    for p in parts {
        out.evaluated += p.evaluated;
        out.vanishing += p.vanishing;
        out.max_vanishing = out.max_vanishing.max(p.max_vanishing);
        out.max_direct = out.max_direct.max(p.max_direct);
        if p.max_residual > out.max_residual {
            out.max_residual = p.max_residual;
            out.worst = p.worst;
        }
    }
    Ok(out)
}

fn lemma421_pair(ctx: &CharPairContext, c_max: u64, v_max: u64, convention: PrefactorSign) -> Result<Lemma421Grid> {
    let engine = Lemma421::new(ctx, v_max);
    let mut rows: HashMap<u64, Vec<Vec<Complex64>>> = HashMap::new();
    let mut out = Lemma421Grid {
        pairs: 1,
        ..Default::default()
    };
    for n in (1..=v_max).filter(|&n| gcd(n, ctx.q1()) == 1) {
        for c in divisors(n * ctx.q2()).into_iter().filter(|&c| c <= c_max) {
            if !rows.contains_key(&c) {
                let t = TSums::new(c, &ctx.chi1, &ctx.chi2)?;
                rows.insert(c, (1..=v_max).map(|m| t.row(m)).collect());
            }
            let table = &rows[&c];
            let vanishing = engine.vanishes(c);
            for m in 1..=v_max {
                for h in 1..=v_max as i64 {
                    for sign in Sign::both() {
                        let direct = k_from_row(&table[(m - 1) as usize], n, h, &ctx.chi2, sign);
                        out.max_direct = out.max_direct.max(direct.norm());
                        if vanishing {
                            out.vanishing += 1;
                            out.max_vanishing = out.max_vanishing.max(direct.norm());
                            continue;
                        }
                        out.evaluated += 1;
                        let closed = engine.closed_form(m, n, h, c, sign, convention)?;
                        let r = (direct - closed).norm();
                        if r > out.max_residual {
                            out.max_residual = r;
                            out.worst = Some(format!(
                                "chi1={:?} chi2={:?} m={m} n={n} h={h} c={c} sign={sign:?}",
                                ctx.chi1.address(),
                                ctx.chi2.address()
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Largest `|E(m; ψ)| / ((m, q₁q₂) τ(m))` over `m ≤ m_max`, all `h★ | q₂★` and all `ψ`.
pub fn e_sum_bound_ratio(ctx: &CharPairContext, m_max: u64) -> f64 {
    let q = ctx.q1() * ctx.q2();
    let mut worst: f64 = 0.0;
    for hs in divisors(ctx.q2_star()) {
        for psi in enumerate_characters(ctx.q2_star() / hs) {
            let e = ESum::new(&psi, ctx);
            for m in 1..=m_max {
                let bound = (gcd(m, q) * arith::divisor_count(m)) as f64;
                worst = worst.max(e.eval(m).norm() / bound);
            }
        }
    }
    worst
}
