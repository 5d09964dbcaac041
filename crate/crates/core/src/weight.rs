//! Smooth weights: the step `W`, the partition weight `V`, compact bumps and
//! the sandwich weights used for smoothed moments.

use std::f64::consts::LN_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::adaptive_gl;

/// Smooth step with `W(x) = 0` for `x ≤ -1`, `W(x) = 1` for `x ≥ 1` and
/// `W(x) + W(-x) = 1`.
pub fn step(x: f64) -> f64 {
    if x <= -1.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // W = h(u+) / (h(u+) + h(u-)) with h(u) = exp(-1/u); written via the ratio.
    let up = 0.5 * (1.0 + x);
    let um = 0.5 * (1.0 - x);
    let e = 1.0 / up - 1.0 / um;
    if e > 700.0 {
        return 0.0;
    }
    1.0 / (1.0 + e.exp())
}

/// Derivative of [`step`].
pub fn step_deriv(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let up = 0.5 * (1.0 + x);
    let um = 0.5 * (1.0 - x);
    let e = 1.0 / up - 1.0 / um;
    if e.abs() > 700.0 {
        return 0.0;
    }
    let r = e.exp();
    0.5 * (1.0 / (up * up) + 1.0 / (um * um)) * r / ((1.0 + r) * (1.0 + r))
}

/// Ramp from 0 at `x = 0` to 1 at `x = 1`.
pub fn ramp(x: f64) -> f64 {
    step(2.0 * x - 1.0)
}

/// The standard bump `exp(-1/(1-y²))` on `(-1, 1)`.
pub fn bump(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        return 0.0;
    }
    (-1.0 / (1.0 - y * y)).exp()
}

/// Bump supported on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
}

impl Bump {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Domain(format!("bump support [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let y = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        bump(y)
    }

    /// The same bump stretched by `k`: `x ↦ f(x/k)`.
    pub fn dilate(&self, k: f64) -> Self {
        Self { lo: self.lo * k, hi: self.hi * k }
    }
}

/// Partition weight `V_b(ξ) = W(-log ξ / (b log 2))`.
///
/// Satisfies `V(ξ) + V(1/ξ) = 1` and vanishes for `ξ ≥ 2^b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothWeight {
    width: f64,
    #[serde(skip)]
    moments: OnceLock<Vec<f64>>,
}

impl PartialEq for SmoothWeight {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
    }
}

impl Default for SmoothWeight {
    fn default() -> Self {
        Self::new(1.0).expect("width 1 is admissible")
    }
}

/// Number of log-moments computed per weight.
const MOMENT_COUNT: usize = 17;

impl SmoothWeight {
    /// `width` is `b` in `V_b`; must lie in `(0, 1]` so that `V(ξ) = 0` for `ξ ≥ 2`.
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 1.0) {
            return Err(Error::Inadmissible(format!("width {width} outside (0, 1]")));
        }
        Ok(Self { width, moments: OnceLock::new() })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 1.0;
        }
        step(-xi.ln() / (self.width * LN_2))
    }

    #[inline]
    pub fn deriv(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        let s = self.width * LN_2;
        -step_deriv(-xi.ln() / s) / (s * xi)
    }

    /// Support of `V'`.
    pub fn transition(&self) -> (f64, f64) {
        let r = 2f64.powf(self.width);
        (1.0 / r, r)
    }

    /// Largest `|V(ξ) + V(1/ξ) - 1|` on a log-spaced grid.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=400 {
            let xi = (-3.0 + 6.0 * k as f64 / 400.0).exp();
            worst = worst.max((self.eval(xi) + self.eval(1.0 / xi) - 1.0).abs());
        }
        worst
    }

    pub fn check_admissible(&self) -> Result<()> {
        let r = self.symmetry_residual();
        if r > 1e-10 {
            return Err(Error::Inadmissible(format!("symmetry residual {r:e}")));
        }
        if self.eval(2.0) != 0.0 {
            return Err(Error::Inadmissible("V(2) != 0".into()));
        }
        Ok(())
    }

    /// `∫₀^∞ V'(ξ) (log ξ)^k dξ`, by adaptive quadrature over the transition region.
    pub fn log_moment(&self, k: usize) -> f64 {
        if k < MOMENT_COUNT {
            return self.moments.get_or_init(|| (0..MOMENT_COUNT).map(|j| self.compute_moment(j)).collect())[k];
        }
        self.compute_moment(k)
    }

    fn compute_moment(&self, k: usize) -> f64 {
        let (a, b) = self.transition();
        let f = |xi: f64| self.deriv(xi) * xi.ln().powi(k as i32);
        // split at 1 where the integrand changes character for odd k
        let left = adaptive_gl(a, 1.0, 1e-15, f).unwrap_or_else(|v| v);
        let right = adaptive_gl(1.0, b, 1e-15, f).unwrap_or_else(|v| v);
        left + right
    }

    /// Mellin transform `V̂(z) = ∫ V(ξ) ξ^{z-1} dξ` for real `z > 0`, by quadrature.
    pub fn mellin(&self, z: f64) -> f64 {
        let (a, b) = self.transition();
        let head = a.powf(z) / z;
        let mid = adaptive_gl(a, b, 1e-14, |xi| self.eval(xi) * xi.powf(z - 1.0)).unwrap_or_else(|v| v);
        head + mid
    }
}

/// Which side of the sharp cutoff a sandwich weight approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Smooth approximations `w⁻ ≤ 1_{[T₀/2, T₀]} ≤ w⁺` with transition scale `Ω T₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichWeight {
    pub t0: f64,
    pub omega: f64,
    pub side: Side,
}

impl SandwichWeight {
    pub fn new(t0: f64, omega: f64, side: Side) -> Result<Self> {
        if !(t0 > 0.0) || !(omega > 0.0 && omega <= 1.0) {
            return Err(Error::Domain(format!("sandwich weight T0={t0}, omega={omega}")));
        }
        Ok(Self { t0, omega, side })
    }

    /// Where the weight can be nonzero.
    pub fn support(&self) -> (f64, f64) {
        let (t0, o) = (self.t0, self.omega);
        match self.side {
            Side::Lower => (0.5 * t0, t0),
            Side::Upper => (0.5 * (1.0 - o) * t0, (1.0 + o) * t0),
        }
    }

    /// Breakpoints `[a, b, c, d]`: rises on `[a, b]`, equals 1 on `[b, c]`, falls on `[c, d]`.
    pub fn breakpoints(&self) -> [f64; 4] {
        let (t0, o) = (self.t0, self.omega);
        match self.side {
            Side::Lower => [0.5 * t0, 0.5 * (1.0 + o) * t0, (1.0 - o) * t0, t0],
            Side::Upper => [0.5 * (1.0 - o) * t0, 0.5 * t0, t0, (1.0 + o) * t0],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let [a, b, c, d] = self.breakpoints();
        if t <= a || t >= d {
            return 0.0;
        }
        if t < b {
            return ramp((t - a) / (b - a));
        }
        if t > c {
            return ramp((d - t) / (d - c));
        }
        1.0
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let [a, b, c, d] = self.breakpoints();
        if t <= a || t >= d || (t >= b && t <= c) {
            return 0.0;
        }
        if t < b {
            let w = b - a;
            return 2.0 * step_deriv(2.0 * (t - a) / w - 1.0) / w;
        }
        let w = d - c;
        -2.0 * step_deriv(2.0 * (d - t) / w - 1.0) / w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_antisymmetric() {
        for k in -100..=100 {
            let x = k as f64 / 73.0;
            assert!((step(x) + step(-x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(step(-1.0), 0.0);
        assert_eq!(step(1.0), 1.0);
        assert!((step(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn step_deriv_matches_difference_quotient() {
        for x in [-0.9, -0.5, 0.0, 0.3, 0.77] {
            let h = 1e-6;
            let fd = (step(x + h) - step(x - h)) / (2.0 * h);
            assert!((fd - step_deriv(x)).abs() < 1e-7, "x={x}");
        }
        let total = adaptive_gl(-1.0, 1.0, 1e-14, step_deriv).unwrap();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn partition_weight_balance() {
        for b in [1.0, 0.5, 0.3] {
            let v = SmoothWeight::new(b).unwrap();
            v.check_admissible().unwrap();
            assert!((v.eval(1.0) - 0.5).abs() < 1e-15);
            assert_eq!(v.eval(2.0), 0.0);
            assert_eq!(v.eval(0.4), 1.0);
        }
        assert!(SmoothWeight::new(1.5).is_err());
    }

    #[test]
    fn log_moments_follow_the_step_moments() {
        let v = SmoothWeight::new(0.7).unwrap();
        assert!((v.log_moment(0) + 1.0).abs() < 1e-13);
        for k in [1, 3, 5] {
            assert!(v.log_moment(k).abs() < 1e-13);
        }
        // M_k = -(-b log 2)^k ∫ W'(x) x^k dx
        let s = 0.7 * LN_2;
        for k in [2, 4, 6] {
            let inner = adaptive_gl(-1.0, 1.0, 1e-15, |x| step_deriv(x) * x.powi(k)).unwrap();
            let want = -(-s).powi(k) * inner;
            assert!((v.log_moment(k as usize) - want).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn sandwich_ordering() {
        let lo = SandwichWeight::new(100.0, 0.2, Side::Lower).unwrap();
        let hi = SandwichWeight::new(100.0, 0.2, Side::Upper).unwrap();
        for k in 0..=400 {
            let t = 20.0 + k as f64 * 0.3;
            let sharp = if (50.0..=100.0).contains(&t) { 1.0 } else { 0.0 };
            assert!(lo.eval(t) <= sharp + 1e-15 && sharp <= hi.eval(t) + 1e-15, "t={t}");
        }
        let (a, b) = hi.support();
        assert!(a >= 25.0 && b <= 200.0);
    }

    #[test]
    fn bump_is_compact() {
        let f = Bump::new(10.0, 100.0).unwrap();
        assert_eq!(f.eval(10.0), 0.0);
        assert_eq!(f.eval(100.0), 0.0);
        assert!((f.eval(55.0) - (-1f64).exp()).abs() < 1e-15);
        assert!(Bump::new(0.0, 1.0).is_err());
    }
}
