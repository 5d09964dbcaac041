//! The shifted convolution sum
//! `D(f, α) = Σ_h h⁻¹ Σ_n τ_{χ₁,χ₂}(n) τ_{χ̄₁,χ̄₂}(n+h) f(n, h) e(αh/n)`
//! by brute force, and its main term built from `Q`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chars::CharPairContext;
use crate::error::{Error, Result};
use crate::lfunc::tau_table;
use crate::mainterm::q_poly;
use crate::numeric::{ComplexKahan, GaussLegendre};
use crate::weight::Bump;

/// Exponent in the Ramanujan–Petersson bound used to normalise reports.
pub const THETA: f64 = 7.0 / 64.0;

/// Largest `N` accepted by the brute force.
pub const N_MAX: f64 = (1u64 << 20) as f64;

/// Which half-line carries the `h`-support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HSign {
    Positive,
    Negative,
}

/// Parameters of one shifted convolution sum, with `f(ξ, η) = u(ξ/N) u(±η/H)`
/// and `u` the standard bump on `[1/4, 2]`.
#[derive(Debug, Clone)]
pub struct ShiftedConvSpec {
    pub ctx: CharPairContext,
    pub alpha: f64,
    pub n: f64,
    pub h: f64,
    pub delta: f64,
    pub sign: HSign,
}

fn unit_bump() -> Bump {
    Bump { lo: 0.25, hi: 2.0 }
}

fn u(x: f64) -> f64 {
    if x <= 0.25 || x >= 2.0 {
        0.0
    } else {
        unit_bump().eval(x)
    }
}

fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

impl ShiftedConvSpec {
    pub fn new(ctx: CharPairContext, alpha: f64, n: f64, h: f64, delta: f64, sign: HSign) -> Result<Self> {
        if !(alpha >= 1.0 && n >= 1.0 && h >= 1.0) {
            return Err(Error::Domain("α, N, H must be at least 1".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("δ = {delta} outside (0, 1)")));
        }
        if alpha.powf(2.0 / 3.0) * h > n.powf(1.0 - delta) {
            return Err(Error::Domain(format!("α^(2/3) H = {} exceeds N^(1-δ)", alpha.powf(2.0 / 3.0) * h)));
        }
        Ok(Self { ctx, alpha, n, h, delta, sign })
    }

    /// `f(ξ, η)`.
    pub fn weight(&self, xi: f64, eta: f64) -> f64 {
        u(xi / self.n) * self.shift_weight(eta)
    }

    /// The `η`-factor `u(±η/H)`.
    pub fn shift_weight(&self, eta: f64) -> f64 {
        let s = match self.sign {
            HSign::Positive => 1.0,
            HSign::Negative => -1.0,
        };
        u(s * eta / self.h)
    }

    /// Integers `h` in the support, in increasing order.
    pub fn shifts(&self) -> Vec<i64> {
        let lo = (self.h / 4.0).floor() as i64;
        let hi = (2.0 * self.h).ceil() as i64;
        let pos: Vec<i64> = (lo.max(1)..=hi).filter(|&h| u(h as f64 / self.h) > 0.0).collect();
        match self.sign {
            HSign::Positive => pos,
            HSign::Negative => pos.into_iter().rev().map(|h| -h).collect(),
        }
    }

    fn n_range(&self) -> (u64, u64) {
        let lo = (self.n / 4.0).floor().max(1.0) as u64;
        let hi = (2.0 * self.n).ceil() as u64;
        (lo, hi)
    }
}

/// Loop nesting for the brute force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopOrder {
    ShiftOuter,
    NOuter,
}

fn check_size(spec: &ShiftedConvSpec) -> Result<()> {
    if spec.n > N_MAX {
        return Err(Error::Domain(format!("N = {} above the brute-force limit 2^20", spec.n)));
    }
    Ok(())
}

/// Brute-force `D(f, α)`.
pub fn d_bruteforce(spec: &ShiftedConvSpec) -> Result<Complex64> {
    d_bruteforce_ordered(spec, LoopOrder::ShiftOuter)
}

pub fn d_bruteforce_ordered(spec: &ShiftedConvSpec, order: LoopOrder) -> Result<Complex64> {
    check_size(spec)?;
    let (lo, hi) = spec.n_range();
    let hs = spec.shifts();
    let hmax = hs.iter().map(|h| h.unsigned_abs()).max().unwrap_or(0);
    let limit = (hi + hmax) as usize;
    let ctx = &spec.ctx;
    let a = tau_table(limit, &ctx.chi1, &ctx.chi2);
    let b = tau_table(limit, &ctx.chi1.conj(), &ctx.chi2.conj());
    let term = |n: u64, h: i64| -> Complex64 {
        let m = n as i64 + h;
        if m < 1 {
            return Complex64::new(0.0, 0.0);
        }
        let w = spec.weight(n as f64, h as f64);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        a[n as usize] * b[m as usize] * e(spec.alpha * h as f64 / n as f64) * (w / h as f64)
    };
    let parts: Vec<Complex64> = match order {
        LoopOrder::ShiftOuter => hs
            .par_iter()
            .map(|&h| (lo..=hi).map(|n| term(n, h)).collect::<ComplexKahan>().value())
            .collect(),
        LoopOrder::NOuter => (lo..=hi)
            .into_par_iter()
            .map(|n| hs.iter().map(|&h| term(n, h)).collect::<ComplexKahan>().value())
            .collect(),
    };
    Ok(parts.into_iter().collect::<ComplexKahan>().value())
}

/// Quadrature panels for the main-term integral in `ξ`.
const MAIN_PANELS: usize = 96;

/// `Σ_h h⁻¹ ∫ Q(log ξ, log(ξ+h); h) f(ξ, h) e(αh/ξ) dξ`.
pub fn d_mainterm(spec: &ShiftedConvSpec) -> Result<Complex64> {
    d_mainterm_panels(spec, MAIN_PANELS)
}

pub fn d_mainterm_panels(spec: &ShiftedConvSpec, panels: usize) -> Result<Complex64> {
    let (lo, hi) = (spec.n / 4.0, 2.0 * spec.n);
    let gl = GaussLegendre::gl16();
    let mut acc = ComplexKahan::new();
    for h in spec.shifts() {
        let q = q_poly(h, &spec.ctx)?;
        let hf = h as f64;
        let wh = spec.shift_weight(hf);
        let v = gl.composite_complex(lo, hi, panels, |xi| {
            q.eval(xi.ln(), (xi + hf).ln()) * e(spec.alpha * hf / xi) * u(xi / spec.n)
        });
        acc.add(v * (wh / hf));
    }
    Ok(acc.value())
}

/// One row of a comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedRow {
    pub n: f64,
    pub h: f64,
    pub alpha: f64,
    pub d_bruteforce: Complex64,
    pub d_mainterm: Complex64,
    pub delta: f64,
    pub relative: f64,
    /// `|Δ| / N^{1/2+θ}`.
    pub normalized: f64,
    /// `|Δ| / N^{0.8}`.
    pub normalized_08: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedReport {
    pub char1: String,
    pub char2: String,
    pub theta: f64,
    pub rows: Vec<ShiftedRow>,
}

impl ShiftedReport {
    pub fn relative_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].relative < w[0].relative)
    }

    pub fn normalized_08_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].normalized_08 <= w[0].normalized_08)
    }
}

pub fn compare_one(spec: &ShiftedConvSpec) -> Result<ShiftedRow> {
    let bf = d_bruteforce(spec)?;
    let mt = d_mainterm(spec)?;
    let delta = (bf - mt).norm();
    Ok(ShiftedRow {
        n: spec.n,
        h: spec.h,
        alpha: spec.alpha,
        d_bruteforce: bf,
        d_mainterm: mt,
        delta,
        relative: delta / bf.norm(),
        normalized: delta / spec.n.powf(0.5 + THETA),
        normalized_08: delta / spec.n.powf(0.8),
    })
}

/// Runs the comparison for `N, 4N, 16N, …` (`doublings` steps of the exponent by 2).
pub fn compare_shifted(base: &ShiftedConvSpec, steps: usize) -> Result<ShiftedReport> {
    let mut rows = Vec::with_capacity(steps);
    for j in 0..steps {
        let mut spec = base.clone();
        spec.n = base.n * 4f64.powi(j as i32);
        rows.push(compare_one(&spec)?);
    }
    Ok(ShiftedReport {
        char1: address(&base.ctx.chi1),
        char2: address(&base.ctx.chi2),
        theta: THETA,
        rows,
    })
}

fn address(chi: &crate::chars::Character) -> String {
    chi.address().unwrap_or_else(|| format!("{}:?", chi.modulus()))
}
