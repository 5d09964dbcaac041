//! Hurwitz zeta, Dirichlet L-functions, the functional-equation factor
//! `α_{χ₁,χ₂}(s)`, twisted divisor coefficients and the smooth approximate
//! functional equation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::divisors;
use crate::chars::{gauss_sum, Character};
use crate::error::{Error, Result};
use crate::numeric::ComplexKahan;
use crate::special::{bernoulli_even, ln_gamma, ln_sin};
use crate::weight::SmoothWeight;

pub use crate::chars::CharPairContext;

/// Default accuracy target for L-values.
pub const DEFAULT_EPS: f64 = 1e-13;

/// Euler–Maclaurin correction terms.
const EM_TERMS: usize = 12;

/// Point of evaluation with an accuracy target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub s: Complex64,
    pub eps: f64,
}

impl EvalPoint {
    pub fn new(s: Complex64, eps: f64) -> Result<Self> {
        if eps < DEFAULT_EPS {
            return Err(Error::Domain(format!("accuracy target {eps:e} below {DEFAULT_EPS:e}")));
        }
        Ok(Self { s, eps })
    }
}

/// Tail of the Euler–Maclaurin formula at `w = N + a`:
/// `w^{1-s}/(s-1)` (optionally minus `1/(s-1)`), `w^{-s}/2` and the Bernoulli
/// corrections. Returns the value and a bound for the remainder.
fn em_tail(s: Complex64, w: f64, drop_pole: bool) -> (Complex64, f64) {
    let lw = w.ln();
    let ws = (-s * lw).exp();
    let sm1 = s - 1.0;
    let head = if drop_pole {
        // (w^{1-s} - 1)/(s - 1), stable near s = 1
        let x = -sm1 * lw;
        if x.norm() < 1e-5 {
            -lw * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0)
        } else {
            (x.exp() - 1.0) / sm1
        }
    } else {
        ws * w / sm1
    };
    let mut acc = head + 0.5 * ws;
    let mut poch = s;
    let mut wpow = ws / w;
    let inv_w2 = 1.0 / (w * w);
    let mut fact = 2.0;
    for k in 1..=EM_TERMS {
        acc += poch * wpow * (bernoulli_even(k) / fact);
        let j = (2 * k) as f64;
        poch = poch * (s + (j - 1.0)) * (s + j);
        wpow *= inv_w2;
        fact *= (j + 1.0) * (j + 2.0);
    }
    // poch = (s)_{2M+1}, wpow = w^{-s-2M-1}
    let m = EM_TERMS as f64;
    let sigma_shift = s.re + 2.0 * m + 1.0;
    let bound = if sigma_shift > 0.0 {
        (poch * (s + 2.0 * m + 1.0)).norm() * bernoulli_even(EM_TERMS + 1).abs() / fact * wpow.norm() / sigma_shift
    } else {
        f64::INFINITY
    };
    (acc, bound)
}

fn initial_shift(s: Complex64) -> usize {
    20 + (0.5 * s.im.abs()).ceil() as usize
}

/// `ζ(s, a)` with a certified Euler–Maclaurin remainder below `eps`.
pub fn hurwitz_zeta_eps(s: Complex64, a: f64, eps: f64) -> Result<Complex64> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Domain(format!("Hurwitz parameter {a} outside (0, 1]")));
    }
    if s == Complex64::new(1.0, 0.0) {
        return Err(Error::Pole);
    }
    if s.im.abs() > 1e5 {
        return Err(Error::Domain(format!("|Im s| = {} exceeds 1e5", s.im.abs())));
    }
    let mut n = initial_shift(s);
    loop {
        let (tail, bound) = em_tail(s, n as f64 + a, false);
        if bound < eps {
            let mut acc = ComplexKahan::new();
            for k in (0..n).rev() {
                acc.add((-s * (k as f64 + a).ln()).exp());
            }
            acc.add(tail);
            return Ok(acc.value());
        }
        if n > 1 << 26 {
            return Err(Error::NoConvergence(format!("Hurwitz zeta at s = {s}")));
        }
        n *= 2;
    }
}

pub fn hurwitz_zeta(s: Complex64, a: f64) -> Result<Complex64> {
    hurwitz_zeta_eps(s, a, DEFAULT_EPS)
}

pub fn zeta(s: Complex64) -> Result<Complex64> {
    hurwitz_zeta(s, 1.0)
}

/// `L(s, χ)` evaluator. The Hurwitz representation
/// `L(s, χ) = q^{-s} Σ_a χ(a) ζ(s, a/q)` is summed as one Dirichlet polynomial
/// plus per-class Euler–Maclaurin tails.
#[derive(Debug, Clone)]
pub struct LFunction {
    chi: Character,
    principal: bool,
}

impl LFunction {
    pub fn new(chi: &Character) -> Self {
        Self { chi: chi.clone(), principal: chi.is_principal() }
    }

    pub fn character(&self) -> &Character {
        &self.chi
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        self.eval_eps(s, DEFAULT_EPS)
    }

    pub fn eval_eps(&self, s: Complex64, eps: f64) -> Result<Complex64> {
        if self.principal && (s - 1.0).norm() < 1e-12 {
            return Err(Error::Pole);
        }
        if s.im.abs() > 1e5 {
            return Err(Error::Domain(format!("|Im s| = {} exceeds 1e5", s.im.abs())));
        }
        let q = self.chi.modulus();
        let qf = q as f64;
        let q_s = (-s * qf.ln()).exp();
        let mut n = initial_shift(s);
        loop {
            let mut bound = 0.0;
            let mut tail = ComplexKahan::new();
            for a in 1..=q {
                let c = self.chi.value_u(a);
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let (t, b) = em_tail(s, n as f64 + a as f64 / qf, !self.principal);
                tail.add(c * t);
                bound += b;
            }
            bound *= q_s.norm();
            if bound < eps {
                let mut acc = ComplexKahan::new();
                let top = n as u64 * q;
                for m in (1..=top).rev() {
                    let c = self.chi.value_u(m);
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    acc.add(c * (-s * (m as f64).ln()).exp());
                }
                acc.add(q_s * tail.value());
                return Ok(acc.value());
            }
            if n > 1 << 24 {
                return Err(Error::NoConvergence(format!("L-function at s = {s}")));
            }
            n *= 2;
        }
    }
}

/// `L(s, χ)`.
pub fn dirichlet_l(s: Complex64, chi: &Character) -> Result<Complex64> {
    LFunction::new(chi).eval(s)
}

/// Fast `L(1/2 + it, χ)` for a fixed character: tables of `n^{-1/2}` and
/// `log n` are shared across evaluations.
#[derive(Debug, Clone)]
pub struct CriticalLine {
    chi: Character,
    q: u64,
    terms: Vec<(f64, f64, Complex64)>,
    t_max: f64,
}

impl CriticalLine {
    /// Prepares tables valid for `|t| ≤ t_max`.
    pub fn new(chi: &Character, t_max: f64) -> Result<Self> {
        if chi.is_principal() && chi.modulus() > 1 {
            return Err(Error::Domain("principal characters of modulus > 1 are not supported".into()));
        }
        let q = chi.modulus();
        let n = Self::shift_for(t_max, q, chi);
        let top = n as u64 * q;
        let mut terms = Vec::new();
        for m in 1..=top {
            let c = chi.value_u(m);
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let lm = (m as f64).ln();
            terms.push((lm, (-0.5 * lm).exp(), c));
        }
        Ok(Self { chi: chi.clone(), q, terms, t_max })
    }

    fn shift_for(t: f64, q: u64, chi: &Character) -> usize {
        let s = Complex64::new(0.5, t);
        let mut n = initial_shift(s);
        let qf = q as f64;
        loop {
            let mut bound = 0.0;
            for a in 1..=q {
                if chi.value_u(a).norm_sqr() == 0.0 {
                    continue;
                }
                bound += em_tail(s, n as f64 + a as f64 / qf, q > 1).1;
            }
            if bound * qf.powf(-0.5) < 1e-14 {
                return n;
            }
            n = n * 3 / 2;
        }
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        assert!(t.abs() <= self.t_max, "t outside the prepared range");
        let s = Complex64::new(0.5, t);
        let q = self.q;
        let qf = q as f64;
        let n = Self::shift_for(t, q, &self.chi);
        let cut = (n as f64 * qf).ln() + 1e-12;
        let mut acc = ComplexKahan::new();
        for &(lm, amp, c) in self.terms.iter() {
            if lm > cut {
                break;
            }
            let (sn, cs) = (t * lm).sin_cos();
            acc.add(c * Complex64::new(amp * cs, -amp * sn));
        }
        let mut tail = Complex64::new(0.0, 0.0);
        for a in 1..=q {
            let c = self.chi.value_u(a);
            if c.norm_sqr() == 0.0 {
                continue;
            }
            tail += c * em_tail(s, n as f64 + a as f64 / qf, q > 1).0;
        }
        acc.add((-s * qf.ln()).exp() * tail);
        acc.value()
    }
}

/// `τ_{χ₁,χ₂}(n) = Σ_{d|n} χ₁(d) χ₂(n/d)`.
pub fn tau_coeff(n: u64, chi1: &Character, chi2: &Character) -> Complex64 {
    divisors(n).into_iter().map(|d| chi1.value_u(d) * chi2.value_u(n / d)).sum()
}

/// `τ_{χ₁,χ₂}(n)` for `0 ≤ n ≤ limit` by a divisor sieve (index 0 unused).
pub fn tau_table(limit: usize, chi1: &Character, chi2: &Character) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); limit + 1];
    for d in 1..=limit {
        let a = chi1.value_u(d as u64);
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let mut k = 1;
        while d * k <= limit {
            out[d * k] += a * chi2.value_u(k as u64);
            k += 1;
        }
    }
    out
}

/// `L(s, χ₁) L(s, χ₂)`.
pub fn l_pair(s: Complex64, ctx: &CharPairContext) -> Result<Complex64> {
    Ok(dirichlet_l(s, &ctx.chi1)? * dirichlet_l(s, &ctx.chi2)?)
}

/// Distance below which `Γ(1-s)²` is treated as singular.
const POLE_GUARD: f64 = 1e-6;

/// `log α_{χ₁,χ₂}(s)` up to the branch of the imaginary part.
fn ln_alpha(s: Complex64, ctx: &CharPairContext) -> Result<Complex64> {
    if s.re > 0.5 {
        let k = s.re.round();
        if k >= 1.0 {
            let d = (s - k).norm();
            if d < POLE_GUARD {
                return Err(Error::NearPole(d));
            }
        }
    }
    let g = gauss_sum(&ctx.chi1, 1) * gauss_sum(&ctx.chi2, 1);
    let k1 = ctx.chi1.kappa() as f64;
    let k2 = ctx.chi2.kappa() as f64;
    let i_pow = Complex64::new(0.0, 0.5 * PI * (k1 + k2));
    let q = (ctx.q1() * ctx.q2()) as f64;
    let pref = g.ln() - i_pow - 2.0 * PI.ln();
    let power = s * (4.0 * PI * PI / q).ln();
    let sines = ln_sin(0.5 * PI * (s + k1)) + ln_sin(0.5 * PI * (s + k2));
    Ok(pref + power + sines + 2.0 * ln_gamma(1.0 - s))
}

/// `α_{χ₁,χ₂}(s)` in `L_{χ₁,χ₂}(s) = α(s) L_{χ̄₁,χ̄₂}(1-s)`.
pub fn alpha_factor(s: Complex64, ctx: &CharPairContext) -> Result<Complex64> {
    Ok(ln_alpha(s, ctx)?.exp())
}

/// Leading-order approximation of `α(1/2 + it)` for `|t| ≥ 1`:
/// `i G(χ₁)G(χ₂)/((-1)^{κ₁+κ₂} √(q₁q₂)) e((t/π) log(2πe/(t√(q₁q₂))))`.
pub fn alpha_approx(t: f64, ctx: &CharPairContext) -> Complex64 {
    let g = gauss_sum(&ctx.chi1, 1) * gauss_sum(&ctx.chi2, 1);
    let sign = if (ctx.chi1.kappa() + ctx.chi2.kappa()) % 2 == 0 { 1.0 } else { -1.0 };
    let q0 = ctx.q0();
    let phase = 2.0 * t * (2.0 * PI * std::f64::consts::E / (t * q0)).ln();
    Complex64::i() * g * sign / q0 * Complex64::from_polar(1.0, phase)
}

/// Output of [`afe_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfeTerms {
    pub direct: Complex64,
    pub main_sum: Complex64,
    pub dual_sum: Complex64,
    pub alpha: Complex64,
    pub residual: Complex64,
}

/// Both smoothed sums of the approximate functional equation at `s` with
/// lengths `x, y`, and the residual `L(s) - main - α(s)·dual`.
pub fn afe_eval(s: Complex64, ctx: &CharPairContext, v: &SmoothWeight, x: f64, y: f64) -> Result<AfeTerms> {
    let t = s.im;
    if !(0.5..=1.0).contains(&s.re) {
        return Err(Error::AfeConstraint(format!("Re s = {} outside [1/2, 1]", s.re)));
    }
    if !(x >= 1.0 && y >= 1.0) {
        return Err(Error::AfeConstraint("x, y must be at least 1".into()));
    }
    let q = (ctx.q1() * ctx.q2()) as f64;
    let lhs = 4.0 * PI * PI * x * y;
    let rhs = q * t * t;
    if (lhs - rhs).abs() > 1e-9 * rhs.max(1.0) {
        return Err(Error::AfeConstraint(format!("4π²xy = {lhs} but q₁q₂t² = {rhs}")));
    }
    if (ctx.q1() as f64) > t || (ctx.q2() as f64) > t {
        return Err(Error::AfeConstraint("requires q₁, q₂ ≤ t".into()));
    }
    let limit = (2.0 * x.max(y)).ceil() as usize + 1;
    let tau = tau_table(limit, &ctx.chi1, &ctx.chi2);
    let mut main = ComplexKahan::new();
    let mut dual = ComplexKahan::new();
    for (n, tn) in tau.iter().enumerate().skip(1) {
        let ln = (n as f64).ln();
        let vx = v.eval(n as f64 / x);
        if vx != 0.0 {
            main.add(tn * (-s * ln).exp() * vx);
        }
        let vy = v.eval(n as f64 / y);
        if vy != 0.0 {
            dual.add(tn.conj() * (-(1.0 - s) * ln).exp() * vy);
        }
    }
    let alpha = alpha_factor(s, ctx)?;
    let direct = l_pair(s, ctx)?;
    let main_sum = main.value();
    let dual_sum = dual.value();
    Ok(AfeTerms { direct, main_sum, dual_sum, alpha, residual: direct - main_sum - alpha * dual_sum })
}

/// [`afe_eval`] on the critical line with `x = y = t √(q₁q₂) / 2π`.
pub fn afe_critical(t: f64, ctx: &CharPairContext, v: &SmoothWeight) -> Result<AfeTerms> {
    let x = t * ctx.q0() / (2.0 * PI);
    afe_eval(Complex64::new(0.5, t), ctx, v, x, x)
}

/// Median of `|R|` over `samples` equally spaced points of `[T/2, T]`.
pub fn afe_median_residual(big_t: f64, samples: usize, ctx: &CharPairContext, v: &SmoothWeight) -> Result<f64> {
    let mut r = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = 0.5 * big_t + 0.5 * big_t * (k as f64 + 0.5) / samples as f64;
        r.push(afe_critical(t, ctx, v)?.residual.norm());
    }
    r.sort_by(|a, b| a.total_cmp(b));
    let m = samples / 2;
    Ok(if samples % 2 == 1 { r[m] } else { 0.5 * (r[m - 1] + r[m]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chars::kronecker_character;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hurwitz_classical_values() {
        let pi2 = PI * PI;
        assert!((hurwitz_zeta(c(2.0, 0.0), 0.5).unwrap().re - pi2 / 2.0).abs() < 1e-12);
        assert!((hurwitz_zeta(c(2.0, 0.0), 1.0).unwrap().re - pi2 / 6.0).abs() < 1e-13);
        assert_eq!(hurwitz_zeta(c(1.0, 0.0), 0.5), Err(Error::Pole));
    }

    #[test]
    fn hurwitz_against_long_direct_run() {
        // 10^6 terms plus the same tail formula with a far larger shift
        let s = c(0.5, 10.0);
        let a = 1.0 / 3.0;
        let n = 1_000_000usize;
        let mut acc = ComplexKahan::new();
        for k in (0..n).rev() {
            acc.add((-s * (k as f64 + a).ln()).exp());
        }
        acc.add(em_tail(s, n as f64 + a, false).0);
        let got = hurwitz_zeta(s, a).unwrap();
        assert!((got - acc.value()).norm() < 1e-12);
    }

    #[test]
    fn l_values() {
        let chi = kronecker_character(-4).unwrap();
        let l1 = dirichlet_l(c(1.0, 0.0), &chi).unwrap();
        assert!((l1.re - PI / 4.0).abs() < 1e-13 && l1.im.abs() < 1e-14);
        let l2 = dirichlet_l(c(2.0, 0.0), &chi).unwrap();
        assert!((l2.re - 0.915_965_594_177_219_0).abs() < 1e-13);
        let chi3 = kronecker_character(-3).unwrap();
        assert!(dirichlet_l(c(0.5, 0.0), &chi3).unwrap().im.abs() < 1e-14);
        assert_eq!(dirichlet_l(c(1.0, 0.0), &Character::principal(5)), Err(Error::Pole));
    }

    #[test]
    fn conjugation_symmetry() {
        let chi = Character::new(7, 1).unwrap();
        for s in [c(0.5, 14.0), c(0.8, -3.0), c(2.0, 40.0)] {
            let a = dirichlet_l(s.conj(), &chi.conj()).unwrap();
            let b = dirichlet_l(s, &chi).unwrap().conj();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn critical_line_evaluator_agrees() {
        for addr in ["3:1", "4:1", "5:1", "1:0"] {
            let chi = Character::from_address(addr).unwrap();
            let fast = CriticalLine::new(&chi, 600.0).unwrap();
            for t in [1.0, 17.3, 250.0, 599.0] {
                let a = fast.eval(t);
                let b = dirichlet_l(c(0.5, t), &chi).unwrap();
                assert!((a - b).norm() < 1e-11 * b.norm().max(1.0), "{addr} t={t}");
            }
        }
    }

    #[test]
    fn tau_basics() {
        let chi = Character::new(5, 1).unwrap();
        assert_eq!(tau_coeff(1, &chi, &chi), c(1.0, 0.0));
        assert!((tau_coeff(7, &chi, &chi) - 2.0 * chi.value_u(7)).norm() < 1e-14);
        let table = tau_table(200, &chi, &chi.conj());
        for n in 1..=200u64 {
            assert!((table[n as usize] - tau_coeff(n, &chi, &chi.conj())).norm() < 1e-13);
        }
    }

    #[test]
    fn tau_dirichlet_series_at_three() {
        let ctx = CharPairContext::from_addresses("3:1", "4:1").unwrap();
        let n = 100_000;
        let table = tau_table(n, &ctx.chi1, &ctx.chi2);
        let mut acc = ComplexKahan::new();
        for k in (1..=n).rev() {
            acc.add(table[k] / (k as f64).powi(3));
        }
        let want = l_pair(c(3.0, 0.0), &ctx).unwrap();
        assert!((acc.value() - want).norm() < 1e-8);
    }

    #[test]
    fn alpha_unimodular_on_critical_line() {
        for (a, b) in [("3:1", "3:1"), ("3:1", "4:1"), ("5:1", "5:2"), ("1:0", "4:1")] {
            let ctx = CharPairContext::from_addresses(a, b).unwrap();
            for t in [1.0, 5.0, 10.0, 100.0] {
                let v = alpha_factor(c(0.5, t), &ctx).unwrap();
                assert!((v.norm() - 1.0).abs() < 1e-10, "{a} {b} t={t}");
            }
        }
    }

    #[test]
    fn functional_equation_closure() {
        let ctx = CharPairContext::from_addresses("3:1", "4:1").unwrap();
        let conj = ctx.conj().unwrap();
        let s = c(0.3, 7.0);
        let lhs = l_pair(s, &ctx).unwrap();
        let rhs = alpha_factor(s, &ctx).unwrap() * l_pair(1.0 - s, &conj).unwrap();
        assert!((lhs - rhs).norm() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn alpha_rejects_pole() {
        let ctx = CharPairContext::from_addresses("3:1", "3:1").unwrap();
        assert!(matches!(alpha_factor(c(2.0, 1e-9), &ctx), Err(Error::NearPole(_))));
    }

    #[test]
    fn alpha_approximation_converges() {
        let ctx = CharPairContext::from_addresses("5:1", "3:1").unwrap();
        let mut prev = f64::INFINITY;
        for t in [10.0, 100.0, 1000.0] {
            let d = (alpha_factor(c(0.5, t), &ctx).unwrap() - alpha_approx(t, &ctx)).norm();
            assert!(d < prev && d < 1.0 / t, "t={t} d={d}");
            prev = d;
        }
    }

    #[test]
    fn afe_rejects_bad_lengths() {
        let ctx = CharPairContext::from_addresses("3:1", "3:1").unwrap();
        let v = SmoothWeight::default();
        assert!(afe_eval(c(0.5, 100.0), &ctx, &v, 10.0, 10.0).is_err());
        assert!(afe_critical(2.0, &ctx, &v).is_err());
    }

    #[test]
    fn afe_single_point() {
        let ctx = CharPairContext::from_addresses("3:1", "3:1").unwrap();
        let r = afe_critical(500.0, &ctx, &SmoothWeight::default()).unwrap();
        assert!(r.residual.norm() < 0.05, "{}", r.residual.norm());
    }
}
