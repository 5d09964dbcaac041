//! Voronoi summation for `τ_{χ₁,χ₂}(n)` twisted by `e(an/c)`, and its
//! arithmetic-progression form, verified by evaluating both sides.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{divisors, gcd, gcd_i, lcm, mobius};
use crate::chars::{e_frac, gauss_sum, CharPairContext};
use crate::error::{Error, Result};
use crate::expsums::{HatTau, TSums};
use crate::lfunc::{dirichlet_l, tau_coeff};
use crate::numeric::{ComplexKahan, GaussLegendre};
use crate::special::{bessel_j0, bessel_k0, bessel_y0, digamma, EULER_GAMMA};
use crate::weight::Bump;

/// Absolute residual below which a Voronoi check passes.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Smooth compactly supported test function on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    bump: Bump,
}

impl TestFunction {
    pub fn bump(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self { bump: Bump::new(lo, hi)? })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.bump.lo, self.bump.hi)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.bump.lo || x >= self.bump.hi {
            0.0
        } else {
            self.bump.eval(x)
        }
    }

    /// `ξ ↦ f(ξ/k)`.
    pub fn dilate(&self, k: f64) -> Self {
        Self { bump: self.bump.dilate(k) }
    }

    /// `∫ g(ξ) f(ξ) dξ` by composite Gauss–Legendre.
    pub fn integrate_against<G: FnMut(f64) -> Complex64>(&self, panels: usize, mut g: G) -> Complex64 {
        let (lo, hi) = self.support();
        GaussLegendre::gl16().composite_complex(lo, hi, panels, |x| g(x) * self.eval(x))
    }
}

/// Which Bessel kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelSign {
    Plus,
    Minus,
}

impl KernelSign {
    fn factor(self) -> i64 {
        match self {
            KernelSign::Plus => 1,
            KernelSign::Minus => -1,
        }
    }
}

/// `B⁺(ξ)`: `-2π Y₀(4πξ)` for equal parities, `-2πi J₀(4πξ)` otherwise.
pub fn bessel_kernel_plus(xi: f64, ctx: &CharPairContext) -> Complex64 {
    if ctx.chi1.sign() == ctx.chi2.sign() {
        Complex64::new(-2.0 * PI * bessel_y0(4.0 * PI * xi), 0.0)
    } else {
        Complex64::new(0.0, -2.0 * PI * bessel_j0(4.0 * PI * xi))
    }
}

/// `B⁻(ξ) = 2(χ₁(-1) + χ₂(-1)) K₀(4πξ)`.
pub fn bessel_kernel_minus(xi: f64, ctx: &CharPairContext) -> Complex64 {
    let pref = 2.0 * (ctx.chi1.sign() + ctx.chi2.sign()) as f64;
    if pref == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(pref * bessel_k0(4.0 * PI * xi), 0.0)
}

fn kernel(sign: KernelSign, xi: f64, ctx: &CharPairContext) -> Complex64 {
    match sign {
        KernelSign::Plus => bessel_kernel_plus(xi, ctx),
        KernelSign::Minus => bessel_kernel_minus(xi, ctx),
    }
}

/// `∫ B^±(k ξ^{1/2}) f(ξ) dξ`, integrated in `x = ξ^{1/2}` with panels no wider
/// than one oscillation.
pub fn kernel_integral(f: &TestFunction, sign: KernelSign, k: f64, ctx: &CharPairContext) -> Complex64 {
    let (lo, hi) = f.support();
    let (a, b) = (lo.sqrt(), hi.sqrt());
    let panels = ((b - a) * 2.0 * k).ceil().max(50.0) as usize;
    GaussLegendre::gl16().composite_complex(a, b, panels, |x| kernel(sign, k * x, ctx) * (2.0 * x * f.eval(x * x)))
}

/// Linear polynomial `x·X + c` in `X = log ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiPolynomial {
    pub x: Complex64,
    pub c: Complex64,
}

impl PiPolynomial {
    pub fn eval(&self, big_x: f64) -> Complex64 {
        self.x * big_x + self.c
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.x - other.x).norm().max((self.c - other.c).norm())
    }
}

fn check_coprime(a: i64, c: u64) -> Result<()> {
    if c == 0 {
        return Err(Error::Domain("c must be positive".into()));
    }
    if gcd_i(a, c as i64) != 1 {
        return Err(Error::Domain(format!("gcd({a}, {c}) > 1")));
    }
    Ok(())
}

/// The displayed closed form of `Π_{χ₁,χ₂}(X; c, a)`.
pub fn pi_polynomial(c: u64, a: i64, ctx: &CharPairContext) -> Result<PiPolynomial> {
    check_coprime(a, c)?;
    let (chi1, chi2) = (&ctx.chi1, &ctx.chi2);
    let (q1, q2) = (ctx.q1(), ctx.q2());
    let zero = Complex64::new(0.0, 0.0);
    if ctx.same_character() {
        let g = gcd(c, q1);
        let pref = chi1.value_u(c / g) * chi1.value(a * (q1 / g) as i64).conj() * gauss_sum(chi1, 1);
        let mut x = zero;
        let mut k = zero;
        for d in divisors(q1) {
            let w = mobius(d) as f64 / d as f64;
            x += w;
            k += w * (2.0 * EULER_GAMMA + 2.0 * (q1 as f64 / (c * d) as f64).ln());
        }
        return Ok(PiPolynomial { x: pref * x, c: pref * k });
    }
    let l12 = dirichlet_l(Complex64::new(1.0, 0.0), &chi1.mul(&chi2.conj()))?;
    let l21 = dirichlet_l(Complex64::new(1.0, 0.0), &chi1.conj().mul(chi2))?;
    let g2 = gcd(c, q2);
    let g1 = gcd(c, q1);
    let t1 = chi1.value_u(c / g2) * chi2.value_u(q2 / g2).conj() * gauss_sum(chi2, a) * l12;
    let t2 = chi2.value_u(c / g1) * chi1.value_u(q1 / g1).conj() * gauss_sum(chi1, a) * l21;
    Ok(PiPolynomial { x: zero, c: t1 + t2 })
}

/// `Π` assembled from the Laurent coefficients `λ⁽²⁾`, `λ⁽¹⁾` of
/// `Σ τ(n) e(an/c) n^{-s}` at `s = 1`: `Π = c(λ⁽²⁾X + λ⁽¹⁾ - λ⁽²⁾ log(c₁c₂))`.
pub fn pi_from_laurent(c: u64, a: i64, ctx: &CharPairContext) -> Result<PiPolynomial> {
    check_coprime(a, c)?;
    let c1 = lcm(c, ctx.q1());
    let c2 = lcm(c, ctx.q2());
    let big = (c1 * c2) as f64;
    let dig2: Vec<f64> = (1..=c2).map(|b| digamma(b as f64 / c2 as f64)).collect();
    let mut l2 = ComplexKahan::new();
    let mut l1 = ComplexKahan::new();
    let ar = a.rem_euclid(c as i64) as u64;
    for b1 in 1..=c1 {
        let v1 = ctx.chi1.value_u(b1);
        if v1.norm_sqr() == 0.0 {
            continue;
        }
        let d1 = digamma(b1 as f64 / c1 as f64);
        for b2 in 1..=c2 {
            let v2 = ctx.chi2.value_u(b2);
            if v2.norm_sqr() == 0.0 {
                continue;
            }
            let ph = (ar as u128 * b1 as u128 * b2 as u128 % c as u128) as i64;
            let t = v1 * v2 * e_frac(ph, c);
            l2.add(t);
            l1.add(-t * (d1 + dig2[(b2 - 1) as usize]));
        }
    }
    let lam2 = l2.value() / big;
    let lam1 = l1.value() / big;
    let cf = c as f64;
    Ok(PiPolynomial { x: lam2 * cf, c: (lam1 - lam2 * big.ln()) * cf })
}

/// Outcome of a two-sided check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// Dual-sum truncation control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSettings {
    /// Stop once a full block of terms has total size below this.
    pub tail_tol: f64,
    pub block: u64,
    pub n_max: u64,
    /// Fixed truncation instead of the tail rule.
    pub fixed: Option<u64>,
}

impl Default for DualSettings {
    fn default() -> Self {
        Self { tail_tol: 1e-9, block: 128, n_max: 200_000, fixed: None }
    }
}

/// Terms `Σ_± coeff^±(n) ∫B^±(...)f` for `n = 1..`, together with whether the tail rule was met.
struct DualTerms {
    terms: Vec<Complex64>,
    converged: bool,
    last_block: f64,
}

fn dual_terms<C>(f: &TestFunction, big_c: f64, ctx: &CharPairContext, coeff: C, settings: &DualSettings) -> DualTerms
where
    C: Fn(u64, KernelSign) -> Complex64 + Sync,
{
    let minus_live = ctx.chi1.sign() + ctx.chi2.sign() != 0;
    let term = |n: u64| {
        let k = (n as f64 / big_c).sqrt();
        let mut t = coeff(n, KernelSign::Plus) * kernel_integral(f, KernelSign::Plus, k, ctx);
        if minus_live {
            let km = coeff(n, KernelSign::Minus);
            if km.norm_sqr() > 0.0 {
                t += km * kernel_integral(f, KernelSign::Minus, k, ctx);
            }
        }
        t
    };
    let mut terms = Vec::new();
    let mut n = 1u64;
    let limit = settings.fixed.unwrap_or(settings.n_max);
    let mut last_block = f64::INFINITY;
    let mut converged = settings.fixed.is_some();
    while n <= limit {
        let end = (n + settings.block - 1).min(limit);
        let block: Vec<Complex64> = (n..=end).into_par_iter().map(term).collect();
        last_block = block.iter().map(|t| t.norm()).sum();
        terms.extend(block);
        n = end + 1;
        if settings.fixed.is_none() && last_block < settings.tail_tol {
            converged = true;
            break;
        }
    }
    DualTerms { terms, converged, last_block }
}

fn ordered_sum(terms: &[Complex64]) -> Complex64 {
    terms.iter().copied().collect::<ComplexKahan>().value()
}

/// Both sides of the twisted Voronoi formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCheck {
    pub c: u64,
    pub a: i64,
    pub lhs: Complex64,
    pub main: Complex64,
    pub dual: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub n_dual_used: u64,
    pub tail_estimate: f64,
    pub status: Status,
    /// `(N, residual)` with the dual sum cut at `N`, for `N = n_dual_used / 2^j`.
    pub truncation_profile: Vec<(u64, f64)>,
}

impl VoronoiCheck {
    /// Geometric-mean factor by which the residual falls per doubling of the
    /// truncation, from the coarsest cut after which it stays below `tol` down
    /// to the final cut. `None` when no such range of doublings exists.
    pub fn mean_drop_per_doubling(&self, tol: f64) -> Option<f64> {
        // profile runs from the finest cut to the coarsest
        let p = &self.truncation_profile;
        let below = p.iter().take_while(|r| r.1 <= tol).count();
        if below < 2 {
            return None;
        }
        let (first, last) = (p[below - 1].1, p[0].1);
        let steps = (below - 1) as f64;
        Some((first / last.max(f64::MIN_POSITIVE)).powf(1.0 / steps))
    }
}

fn lhs_sum<W: Fn(u64) -> bool>(f: &TestFunction, ctx: &CharPairContext, phase: impl Fn(u64) -> Complex64, keep: W) -> Complex64 {
    let (lo, hi) = f.support();
    let mut acc = ComplexKahan::new();
    for n in (lo.floor() as u64).max(1)..=(hi.ceil() as u64) {
        if !keep(n) {
            continue;
        }
        let w = f.eval(n as f64);
        if w == 0.0 {
            continue;
        }
        acc.add(tau_coeff(n, &ctx.chi1, &ctx.chi2) * phase(n) * w);
    }
    acc.value()
}

fn main_integral(f: &TestFunction, pi: &PiPolynomial) -> Complex64 {
    f.integrate_against(400, |x| pi.eval(x.ln()))
}

/// Evaluates both sides of the Voronoi formula for `Σ f(n) τ(n) e(an/c)`.
pub fn verify_voronoi(f: &TestFunction, a: i64, c: u64, ctx: &CharPairContext, settings: &DualSettings) -> Result<VoronoiCheck> {
    check_coprime(a, c)?;
    if f.support().0 <= 0.0 {
        return Err(Error::Domain("support must be in (0, ∞)".into()));
    }
    let c1 = lcm(c, ctx.q1());
    let c2 = lcm(c, ctx.q2());
    let big_c = (c1 * c2) as f64;
    let lhs = lhs_sum(f, ctx, |n| e_frac((a as i128 * n as i128).rem_euclid(c as i128) as i64, c), |_| true);
    let pi = pi_from_laurent(c, a, ctx)?;
    let main = main_integral(f, &pi) / c as f64;
    let hp = HatTau::new(a, c, &ctx.chi1, &ctx.chi2)?;
    let hm = HatTau::new(-a, c, &ctx.chi1, &ctx.chi2)?;
    let norm = 1.0 / big_c.sqrt();
    let dt = dual_terms(
        f,
        big_c,
        ctx,
        |n, s| match s {
            KernelSign::Plus => hp.eval(n) * norm,
            KernelSign::Minus => hm.eval(n) * norm,
        },
        settings,
    );
    let dual = ordered_sum(&dt.terms);
    let rhs = main + dual;
    let residual = (lhs - rhs).norm();
    let n_used = dt.terms.len() as u64;
    let mut profile = Vec::new();
    let mut cut = n_used;
    while cut >= 8 && profile.len() < 8 {
        let r = (lhs - main - ordered_sum(&dt.terms[..cut as usize])).norm();
        profile.push((cut, r));
        cut /= 2;
    }
    let status = status_of(residual, dt.converged);
    Ok(VoronoiCheck {
        c,
        a,
        lhs,
        main,
        dual,
        rhs,
        residual,
        n_dual_used: n_used,
        tail_estimate: dt.last_block,
        status,
        truncation_profile: profile,
    })
}

fn status_of(residual: f64, converged: bool) -> Status {
    if !converged {
        Status::Inconclusive
    } else if residual < RESIDUAL_TOL {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Both sides of the arithmetic-progression formula for `Σ_{n ≡ h (c)} f(n) τ(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionCheck {
    pub c: u64,
    pub h: i64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub n_dual_used: u64,
    pub status: Status,
}

pub fn verify_voronoi_ap(f: &TestFunction, h: i64, c: u64, ctx: &CharPairContext, settings: &DualSettings) -> Result<ProgressionCheck> {
    if c == 0 {
        return Err(Error::Domain("c must be positive".into()));
    }
    let hr = h.rem_euclid(c as i64) as u64;
    let lhs = lhs_sum(f, ctx, |_| Complex64::new(1.0, 0.0), |n| n % c == hr);
    let mut main = ComplexKahan::new();
    let mut dual = ComplexKahan::new();
    let mut converged = true;
    let mut n_used = 0;
    for c0 in divisors(c) {
        for a0 in (0..c0).filter(|&a| gcd(a, c0) == 1) {
            let pi = pi_from_laurent(c0, a0 as i64, ctx)?;
            let ph = e_frac(-(((hr as u128 * a0 as u128) % c0 as u128) as i64), c0);
            main.add(ph * main_integral(f, &pi) / c0 as f64);
        }
        let big_c = (lcm(c0, ctx.q1()) * lcm(c0, ctx.q2())) as f64;
        let ts = TSums::new(c0, &ctx.chi1, &ctx.chi2)?;
        let norm = (c0 as f64).sqrt() / big_c.sqrt();
        let dt = dual_terms(
            f,
            big_c,
            ctx,
            |n, s| ts.eval(n, s.factor() * h) * norm,
            settings,
        );
        converged &= dt.converged;
        n_used = n_used.max(dt.terms.len() as u64);
        dual.add(ordered_sum(&dt.terms));
    }
    let cf = c as f64;
    let rhs = (main.value() + dual.value()) / cf;
    let residual = (lhs - rhs).norm();
    Ok(ProgressionCheck { c, h, lhs, rhs, residual, n_dual_used: n_used, status: status_of(residual, converged) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(a: &str, b: &str) -> CharPairContext {
        CharPairContext::from_addresses(a, b).unwrap()
    }

    #[test]
    fn kernel_cases() {
        // mod 5: index 1 odd, index 2 even
        let mixed = ctx("5:1", "5:2");
        assert_eq!(bessel_kernel_minus(0.3, &mixed), Complex64::new(0.0, 0.0));
        assert_eq!(bessel_kernel_plus(0.3, &mixed).re, 0.0);
        let same = ctx("5:2", "1:0");
        assert_eq!(bessel_kernel_plus(0.3, &same).im, 0.0);
        assert!((bessel_kernel_minus(0.3, &same).re - 4.0 * bessel_k0(4.0 * PI * 0.3)).abs() < 1e-15);
    }

    #[test]
    fn pi_classical() {
        let one = ctx("1:0", "1:0");
        let p = pi_polynomial(1, 0, &one).unwrap();
        assert!((p.x - 1.0).norm() < 1e-15);
        assert!((p.c - 2.0 * EULER_GAMMA).norm() < 1e-15);
        assert!(p.max_abs_diff(&pi_from_laurent(1, 0, &one).unwrap()) < 1e-12);
        assert!(pi_polynomial(4, 2, &one).is_err());
    }

    #[test]
    fn pi_constant_for_distinct_characters() {
        for (a, b) in [("3:1", "4:1"), ("5:1", "5:2"), ("3:1", "1:0")] {
            let x = ctx(a, b);
            for c in [1u64, 2, 3, 4, 6] {
                for aa in (1..=c as i64).filter(|&v| gcd_i(v, c as i64) == 1) {
                    assert_eq!(pi_polynomial(c, aa, &x).unwrap().x, Complex64::new(0.0, 0.0));
                    assert!(pi_from_laurent(c, aa, &x).unwrap().x.norm() < 1e-12, "{a} {b} c={c}");
                }
            }
        }
    }

    #[test]
    fn pi_display_matches_laurent() {
        let pairs = [("1:0", "1:0"), ("3:1", "3:1"), ("4:1", "4:1"), ("5:1", "5:1"), ("3:1", "4:1"), ("5:1", "5:2"), ("5:1", "5:3"), ("1:0", "3:1")];
        for (a, b) in pairs {
            let x = ctx(a, b);
            for c in [1u64, 2, 3, 4, 5, 6, 12] {
                for aa in (0..c as i64).filter(|&v| gcd_i(v, c as i64) == 1) {
                    let d = pi_polynomial(c, aa, &x).unwrap();
                    let l = pi_from_laurent(c, aa, &x).unwrap();
                    assert!(d.max_abs_diff(&l) < 1e-10, "{a} {b} c={c} a={aa}: {d:?} vs {l:?}");
                }
            }
        }
    }

    #[test]
    fn classical_divisor_voronoi() {
        let f = TestFunction::bump(10.0, 100.0).unwrap();
        let r = verify_voronoi(&f, 0, 1, &ctx("1:0", "1:0"), &DualSettings::default()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        assert!(r.mean_drop_per_doubling(RESIDUAL_TOL).unwrap() >= 10.0, "{:?}", r.truncation_profile);
    }

    #[test]
    fn twisted_mixed_moduli() {
        let f = TestFunction::bump(20.0, 200.0).unwrap();
        let r = verify_voronoi(&f, 1, 2, &ctx("3:1", "4:1"), &DualSettings::default()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        let g = f.dilate(2.0);
        let r2 = verify_voronoi(&g, 1, 2, &ctx("3:1", "4:1"), &DualSettings::default()).unwrap();
        assert_eq!(r2.status, Status::Pass, "{r2:?}");
    }

    #[test]
    fn progression_form() {
        let f = TestFunction::bump(20.0, 200.0).unwrap();
        let x = ctx("3:1", "3:1");
        let r = verify_voronoi_ap(&f, 1, 4, &x, &DualSettings::default()).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }

    #[test]
    fn progression_additivity() {
        let f = TestFunction::bump(10.0, 60.0).unwrap();
        let x = ctx("1:0", "3:1");
        let settings = DualSettings::default();
        let c = 3;
        let total: Complex64 = (0..c as i64).map(|h| verify_voronoi_ap(&f, h, c, &x, &settings).unwrap().rhs).sum();
        let whole = verify_voronoi_ap(&f, 0, 1, &x, &settings).unwrap();
        assert!((total - whole.rhs).norm() < 1e-8);
        let plain = verify_voronoi(&f, 0, 1, &x, &settings).unwrap();
        assert!((whole.rhs - plain.rhs).norm() < 1e-10);
    }
}
