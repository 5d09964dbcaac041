//! Moment integrals `∫ |L(1/2+it, χ₁)|² |L(1/2+it, χ₂)|² dt` by panel
//! quadrature, and their main terms `∫ P(log t) dt`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chars::CharPairContext;
use crate::error::{Error, Result};
use crate::lfunc::CriticalLine;
use crate::numeric::{GaussLegendre, KahanSum};
use crate::series::LogPolynomial;
use crate::weight::{SandwichWeight, Side};

/// Exponent used to normalise `Δ` in trend checks.
pub const TREND_EXPONENT: f64 = 0.9;

/// Largest `T` handled by the Dirichlet-series evaluator.
pub const T_LIMIT: f64 = 1e4;

/// Runs `f` on a pool of `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

/// Worker count from `LMOMENT_THREADS`, if set and positive.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("LMOMENT_THREADS").ok()?.parse().ok().filter(|&n| n > 0)
}

/// Panel-width control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    /// Multiplies the default width `min(0.5, 2π / (3 log(q₀t/2π)))`.
    pub scale: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

impl QuadSettings {
    pub fn halved(self) -> Self {
        Self { scale: self.scale * 0.5 }
    }

    /// Panel width near height `t` (in the `t` of `L(1/2+it)`).
    pub fn width(&self, q0: f64, t: f64) -> f64 {
        let l = (q0 * t / (2.0 * PI)).ln().max(1.0);
        self.scale * (2.0 * PI / (3.0 * l)).min(0.5)
    }
}

/// `|L(1/2+it, χ₁) L(1/2+it, χ₂)|²` with shared tables.
struct Integrand {
    l1: CriticalLine,
    l2: Option<CriticalLine>,
}

impl Integrand {
    fn new(ctx: &CharPairContext, t_max: f64) -> Result<Self> {
        if t_max > T_LIMIT {
            return Err(Error::Domain(format!("T = {t_max} above {T_LIMIT}")));
        }
        let l1 = CriticalLine::new(&ctx.chi1, t_max)?;
        let l2 = if ctx.same_character() { None } else { Some(CriticalLine::new(&ctx.chi2, t_max)?) };
        Ok(Self { l1, l2 })
    }

    fn eval(&self, t: f64) -> f64 {
        let a = self.l1.eval(t).norm_sqr();
        match &self.l2 {
            None => a * a,
            Some(l2) => a * l2.eval(t).norm_sqr(),
        }
    }
}

/// Splits `[from, to]` into equal panels no wider than the width at `to`.
fn panels_for(from: f64, to: f64, q0: f64, settings: &QuadSettings, out: &mut Vec<(f64, f64)>) {
    if to <= from {
        return;
    }
    let w = settings.width(q0, to);
    let n = ((to - from) / w).ceil().max(1.0) as usize;
    let h = (to - from) / n as f64;
    for i in 0..n {
        let a = from + h * i as f64;
        let b = if i + 1 == n { to } else { a + h };
        out.push((a, b));
    }
}

/// Cumulative sharp moments `∫_{start}^{T} |L L|² dt` at each requested `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCurve {
    pub start: f64,
    pub points: Vec<(f64, f64)>,
    pub panels: usize,
}

impl MomentCurve {
    pub fn at(&self, t: f64) -> Option<f64> {
        self.points.iter().find(|p| p.0 == t).map(|p| p.1)
    }
}

/// Sharp moment integral from `start` to each of the increasing heights `ts`.
pub fn moment_curve(ctx: &CharPairContext, start: f64, ts: &[f64], settings: &QuadSettings) -> Result<MomentCurve> {
    if ts.windows(2).any(|w| w[1] <= w[0]) || ts.first().map_or(false, |&t| t < start) {
        return Err(Error::Domain("heights must increase from the start point".into()));
    }
    let t_max = ts.last().copied().unwrap_or(start);
    let f = Integrand::new(ctx, t_max.max(start))?;
    let q0 = ctx.q0();
    let mut panels = Vec::new();
    let mut ends = Vec::with_capacity(ts.len());
    let mut from = start;
    for &t in ts {
        panels_for(from, t, q0, settings, &mut panels);
        ends.push(panels.len());
        from = t;
    }
    let gl = GaussLegendre::gl16();
    let vals: Vec<f64> = panels.par_iter().map(|&(a, b)| gl.integrate(a, b, |t| f.eval(t))).collect();
    let mut acc = KahanSum::new();
    let mut points = Vec::with_capacity(ts.len());
    let mut k = 0;
    for (&t, &end) in ts.iter().zip(&ends) {
        while k < end {
            acc.add(vals[k]);
            k += 1;
        }
        points.push((t, acc.value()));
    }
    Ok(MomentCurve { start, points, panels: panels.len() })
}

/// `∫₁^T |L(1/2+it, χ₁)|² |L(1/2+it, χ₂)|² dt`.
pub fn moment_integral(ctx: &CharPairContext, t: f64, settings: &QuadSettings) -> Result<f64> {
    if t < 1.0 {
        return Err(Error::Domain("T must be at least 1".into()));
    }
    Ok(moment_curve(ctx, 1.0, &[t], settings)?.points[0].1)
}

/// `∫ (log t)^k dt = t Σ_{j ≤ k} (-1)^{k-j} k!/j! (log t)^j`, evaluated at `t`.
fn log_power_antiderivative(k: usize, t: f64) -> f64 {
    let l = t.ln();
    let mut sum = 0.0;
    // j = k down to 0: coefficient k!/j! with alternating sign
    let mut coef = 1.0;
    for j in (0..=k).rev() {
        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * coef * l.powi(j as i32);
        coef *= j as f64;
    }
    t * sum
}

/// `∫_a^b P(log t) dt` in closed form.
pub fn mainterm_between(p: &LogPolynomial, a: f64, b: f64) -> f64 {
    p.real_coeffs()
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (log_power_antiderivative(k, b) - log_power_antiderivative(k, a)))
        .sum()
}

/// `∫₁^T P(log t) dt`.
pub fn mainterm_integral(p: &LogPolynomial, t: f64) -> f64 {
    mainterm_between(p, 1.0, t)
}

/// Smooth moment and its main term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothMoment {
    pub integral: f64,
    pub main: f64,
}

/// `∫ |L L(1/2 + 2πit/q₀)|² w(t) dt` and `∫ P(log(2πt/q₀)) w(t) dt`.
pub fn smooth_moment(ctx: &CharPairContext, w: &SandwichWeight, p: &LogPolynomial, settings: &QuadSettings) -> Result<SmoothMoment> {
    let q0 = ctx.q0();
    let floor = q0.powf(1.0 / 3.0) * w.t0.powf(-1.0 / 3.0);
    if w.omega <= floor {
        return Err(Error::Domain(format!("Ω = {} not above q₀^(1/3) T₀^(-1/3) = {floor}", w.omega)));
    }
    let scale = 2.0 * PI / q0;
    let (lo, hi) = w.support();
    let f = Integrand::new(ctx, hi * scale)?;
    let [a, b, c, d] = w.breakpoints();
    let mut panels = Vec::new();
    let mut from = lo;
    for to in [a, b, c, d] {
        if to > from {
            // widths are set in the variable 2πt/q₀
            let n = ((to - from) * scale / settings.width(q0, to * scale)).ceil().max(1.0) as usize;
            let h = (to - from) / n as f64;
            for i in 0..n {
                panels.push((from + h * i as f64, if i + 1 == n { to } else { from + h * (i + 1) as f64 }));
            }
            from = to;
        }
    }
    let gl = GaussLegendre::gl16();
    let vals: Vec<(f64, f64)> = panels
        .par_iter()
        .map(|&(x, y)| {
            let i = gl.integrate(x, y, |t| f.eval(scale * t) * w.eval(t));
            let m = gl.integrate(x, y, |t| p.eval_re((scale * t).ln()) * w.eval(t));
            (i, m)
        })
        .collect();
    let integral = vals.iter().map(|v| v.0).collect::<KahanSum>().value();
    let main = vals.iter().map(|v| v.1).collect::<KahanSum>().value();
    Ok(SmoothMoment { integral, main })
}

/// The pair `(w⁻, w⁺)` around `[T₀/2, T₀]` and the sharp integral between them,
/// all in the variable `t` of `L(1/2 + 2πit/q₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: SmoothMoment,
    pub sharp: f64,
    pub upper: SmoothMoment,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.lower.integral <= self.sharp && self.sharp <= self.upper.integral
    }
}

pub fn sandwich(ctx: &CharPairContext, t0: f64, omega: f64, p: &LogPolynomial, settings: &QuadSettings) -> Result<Sandwich> {
    let lower = smooth_moment(ctx, &SandwichWeight::new(t0, omega, Side::Lower)?, p, settings)?;
    let upper = smooth_moment(ctx, &SandwichWeight::new(t0, omega, Side::Upper)?, p, settings)?;
    let scale = 2.0 * PI / ctx.q0();
    let curve = moment_curve(ctx, 0.5 * t0 * scale, &[t0 * scale], settings)?;
    Ok(Sandwich { lower, sharp: curve.points[0].1 / scale, upper })
}

/// One height of a moment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub t: f64,
    pub integral: f64,
    pub main: f64,
    pub delta: f64,
    pub delta_over_t: f64,
    pub delta_over_t_exp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub label: String,
    pub exponent: f64,
    pub panel_scale: f64,
    pub panels: usize,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    pub fn final_relative(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| (r.delta / r.main).abs())
    }
}

/// Sharp moments against `∫₁^T P(log t) dt` at each height.
pub fn moment_report(label: &str, ctx: &CharPairContext, p: &LogPolynomial, ts: &[f64], settings: &QuadSettings) -> Result<MomentReport> {
    let curve = moment_curve(ctx, 1.0, ts, settings)?;
    let rows = curve
        .points
        .iter()
        .map(|&(t, i)| {
            let m = mainterm_integral(p, t);
            let d = i - m;
            MomentRow { t, integral: i, main: m, delta: d, delta_over_t: d / t, delta_over_t_exp: d / t.powf(TREND_EXPONENT) }
        })
        .collect();
    Ok(MomentReport {
        label: label.to_string(),
        exponent: TREND_EXPONENT,
        panel_scale: settings.scale,
        panels: curve.panels,
        rows,
    })
}

/// Verdict on a moment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendVerdict {
    pub normalized_nonincreasing: bool,
    pub final_relative: f64,
    pub threshold: f64,
    pub pass: bool,
    /// The exponent `2/3` of the proven error term, printed for context.
    pub predicted_exponent: f64,
}

/// Needs at least three doublings, i.e. four heights.
pub fn error_trend(report: &MomentReport, threshold: f64) -> Result<TrendVerdict> {
    if report.rows.len() < 4 {
        return Err(Error::Domain("need at least three doublings of T".into()));
    }
    let nonincreasing = report
        .rows
        .windows(2)
        .all(|w| w[1].delta_over_t_exp.abs() <= w[0].delta_over_t_exp.abs());
    let rel = report.final_relative();
    Ok(TrendVerdict {
        normalized_nonincreasing: nonincreasing,
        final_relative: rel,
        threshold,
        pass: nonincreasing && rel < threshold,
        predicted_exponent: 2.0 / 3.0,
    })
}

/// Least-squares fits of `I(T)/T` by polynomials in `log T` of degree `0..=max_deg`;
/// returns the RMS residual of each fit.
pub fn log_degree_residuals(samples: &[(f64, f64)], max_deg: usize) -> Vec<f64> {
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1 / s.0).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let spread = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max).max(1e-12);
    let us: Vec<f64> = xs.iter().map(|x| (x - mean) / spread).collect();
    (0..=max_deg).map(|d| least_squares_rms(&us, &ys, d)).collect()
}

fn least_squares_rms(xs: &[f64], ys: &[f64], deg: usize) -> f64 {
    let m = deg + 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for (&x, &y) in xs.iter().zip(ys) {
        let pw: Vec<f64> = (0..m).map(|k| x.powi(k as i32)).collect();
        for i in 0..m {
            for j in 0..m {
                a[i][j] += pw[i] * pw[j];
            }
            a[i][m] += pw[i] * y;
        }
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for row in 0..m {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..m).map(|i| a[i][m] / a[i][i]).collect();
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let fit: f64 = coef.iter().enumerate().map(|(k, c)| c * x.powi(k as i32)).sum();
            (y - fit).powi(2)
        })
        .sum();
    (ss / xs.len() as f64).sqrt()
}

/// Smallest degree whose fit is within `factor` of the best residual at `max_deg`.
pub fn fitted_log_degree(samples: &[(f64, f64)], max_deg: usize, factor: f64) -> usize {
    let r = log_degree_residuals(samples, max_deg);
    let best = r[max_deg];
    r.iter().position(|&v| v <= factor * best).unwrap_or(max_deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mainterm::p_same;
    use crate::numeric::adaptive_gl;

    fn ctx(a: &str, b: &str) -> CharPairContext {
        CharPairContext::from_addresses(a, b).unwrap()
    }

    #[test]
    fn closed_form_antiderivatives() {
        let one = LogPolynomial::from_real(&[1.0]);
        assert!((mainterm_integral(&one, 50.0) - 49.0).abs() < 1e-12);
        let lin = LogPolynomial::from_real(&[0.0, 1.0]);
        let t: f64 = 50.0;
        assert!((mainterm_integral(&lin, t) - (t * t.ln() - t + 1.0)).abs() < 1e-12);
        let quart = LogPolynomial::from_real(&[0.0, 0.0, 0.0, 0.0, 1.0]);
        let e = std::f64::consts::E;
        let q = adaptive_gl(1.0, e, 1e-14, |t| t.ln().powi(4)).unwrap();
        assert!((mainterm_integral(&quart, e) - q).abs() < 1e-10);
    }

    #[test]
    fn trivial_and_additive() {
        let x = ctx("3:1", "3:1");
        let s = QuadSettings::default();
        assert_eq!(moment_integral(&x, 1.0, &s).unwrap(), 0.0);
        let whole = moment_curve(&x, 1.0, &[60.0], &s).unwrap().points[0].1;
        let a = moment_curve(&x, 1.0, &[30.0], &s).unwrap().points[0].1;
        let b = moment_curve(&x, 30.0, &[60.0], &s).unwrap().points[0].1;
        assert!((a + b - whole).abs() < 1e-8 * whole);
    }

    #[test]
    fn halved_panels_agree() {
        let x = ctx("3:1", "3:1");
        let a = moment_integral(&x, 100.0, &QuadSettings::default()).unwrap();
        let b = moment_integral(&x, 100.0, &QuadSettings::default().halved()).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn real_character_symmetry() {
        let l = CriticalLine::new(&crate::Character::from_address("4:1").unwrap(), 100.0).unwrap();
        for t in [3.0, 17.5, 64.2] {
            assert!((l.eval(t).norm() - l.eval(-t).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn thread_independence() {
        let x = ctx("3:1", "4:1");
        let s = QuadSettings::default();
        let a = with_threads(1, || moment_curve(&x, 1.0, &[40.0, 80.0], &s).unwrap());
        let b = with_threads(4, || moment_curve(&x, 1.0, &[40.0, 80.0], &s).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn sandwich_orders() {
        let x = ctx("3:1", "3:1");
        let p = p_same(3, 8).unwrap();
        let sw = sandwich(&x, 200.0, 0.3, &p, &QuadSettings::default()).unwrap();
        assert!(sw.holds(), "{sw:?}");
        assert!(smooth_moment(&x, &SandwichWeight::new(200.0, 0.1, Side::Lower).unwrap(), &p, &QuadSettings::default()).is_err());
    }

    #[test]
    fn degree_fit_recovers_synthetic_degree() {
        let samples: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = 50.0 * 1.1f64.powi(i);
                (t, t * (0.3 * t.ln().powi(2) + 0.1 * t.ln() + 2.0) + t.sqrt() * (i as f64).sin())
            })
            .collect();
        assert_eq!(fitted_log_degree(&samples, 4, 1.5), 2);
    }
}
